// ============================================================================
// qinsk/forms.hpp - preassembled linear operators on broken spaces
//
// All operators are returned as sparse matrices acting on coefficient
// vectors; because the basis is orthonormal, moment vectors and coefficient
// vectors coincide and M[i][j] = form(basis_j, basis_i).
//
//  * assemble_a1:  symmetric interior penalty form of the scalar Laplacian,
//    interior facets only (natural boundary condition).  Symmetric negative
//    semidefinite once the penalty exceeds a degree-dependent threshold.
//  * assemble_a2:  componentwise interior penalty form of the vector
//    Laplacian with boundary facets included (weakly enforced no-slip).
//  * assemble_a2_ns: interior penalty form of the full Navier-Stokes stress
//    div(eta1 div(v) I + eta2 (Dv + Dv^T - (2/d) div(v) I)), boundary facets
//    included.  The jump penalty runs over boundary facets as well; without
//    it the boundary consistency terms destroy semidefiniteness.
//  * assemble_gradient: discrete gradient G with central facet fluxes on
//    interior facets.  Its negative transpose -G^T is exactly the discrete
//    divergence with weak zero-normal-flux boundary treatment, which is the
//    duality the scheme's energy balance rests on.
// ============================================================================
#pragma once

#include "qinsk/space.hpp"

namespace qinsk {

// Default interior penalty coefficient; scales like (p+1)^2 as required for
// coercivity, with a safety factor.
inline double min_penalty(int degree)
{
    return 10.0 * (degree + 1) * (degree + 1);
}

namespace detail {

// Scalar SIP Laplacian form
//   A(u, x) = -int grad u . grad x
//             + int_F avg{grad x}.jump{u} + jump{x}.avg{grad u}
//             - int_F (sigma/h) jump{u}.jump{x}
// with F the interior facets, plus the boundary facets when requested.
inline SparseMat sip_scalar(const DgSpace& sp, double sigma, bool with_boundary)
{
    const Mesh& m = *sp.mesh;
    const int nm = sp.nmodes;
    std::vector<Triplet> trip;

    for (int e = 0; e < m.num_elements(); ++e)
        for (int q = 0; q < sp.nvq; ++q) {
            size_t qq = static_cast<size_t>(e) * sp.nvq + q;
            double w = sp.vol_weight[qq];
            for (int i = 0; i < nm; ++i)
                for (int j = 0; j < nm; ++j)
                    trip.emplace_back(e * nm + i, e * nm + j,
                                      -w * sp.vol_grad[qq * nm + i].dot(sp.vol_grad[qq * nm + j]));
        }

    for (int f = 0; f < m.num_facets(); ++f) {
        const Facet& fc = m.facets[f];
        bool bnd = fc.boundary();
        if (bnd && !with_boundary) continue;
        double avg = bnd ? 1.0 : 0.5;  // boundary averages are one-sided
        double pen = sigma / fc.h;
        int nsides = bnd ? 1 : 2;
        for (int q = 0; q < sp.nfq; ++q) {
            size_t qq = static_cast<size_t>(f) * sp.nfq + q;
            double w = sp.facet_weight[qq];
            const Vec& n = fc.normal;  // outward from side 0
            for (int su = 0; su < nsides; ++su)
                for (int sx = 0; sx < nsides; ++sx) {
                    int eu = fc.elem[su], ex = fc.elem[sx];
                    double gu = su == 0 ? 1.0 : -1.0;  // jump sign of side su
                    double gx = sx == 0 ? 1.0 : -1.0;
                    for (int i = 0; i < nm; ++i) {
                        double xv = sp.facet_val[sx][qq * nm + i];
                        Vec xg = sp.facet_grad[sx][qq * nm + i];
                        for (int j = 0; j < nm; ++j) {
                            double uv = sp.facet_val[su][qq * nm + j];
                            Vec ug = sp.facet_grad[su][qq * nm + j];
                            double val = avg * (xg.dot(n)) * gu * uv     // avg{grad x}.jump{u}
                                       + gx * xv * avg * (ug.dot(n))     // jump{x}.avg{grad u}
                                       - pen * gu * gx * uv * xv;        // penalty
                            trip.emplace_back(ex * nm + i, eu * nm + j, w * val);
                        }
                    }
                }
        }
    }

    SparseMat M(sp.scalar_size(), sp.scalar_size());
    M.setFromTriplets(trip.begin(), trip.end());
    return M;
}

} // namespace detail

inline SparseMat assemble_a1(const DgSpace& sp, double sigma)
{
    return detail::sip_scalar(sp, sigma, /*with_boundary=*/false);
}

// Vector Laplacian in Frobenius form: the tensor jumps contract componentwise,
// so the operator is d decoupled copies of the scalar form with boundary
// facets included.
inline SparseMat assemble_a2(const DgSpace& sp, double sigma)
{
    const int d = sp.mesh->dim, nm = sp.nmodes;
    SparseMat S = detail::sip_scalar(sp, sigma, /*with_boundary=*/true);
    std::vector<Triplet> trip;
    trip.reserve(static_cast<size_t>(S.nonZeros()) * d);
    for (int k = 0; k < S.outerSize(); ++k)
        for (SparseMat::InnerIterator it(S, k); it; ++it) {
            int ei = static_cast<int>(it.row()) / nm, i = static_cast<int>(it.row()) % nm;
            int ej = static_cast<int>(it.col()) / nm, j = static_cast<int>(it.col()) % nm;
            for (int c = 0; c < d; ++c)
                trip.emplace_back((ei * d + c) * nm + i, (ej * d + c) * nm + j, it.value());
        }
    SparseMat M(sp.field_size(d), sp.field_size(d));
    M.setFromTriplets(trip.begin(), trip.end());
    return M;
}

// Full Navier-Stokes stress form with bulk viscosity eta1 and shear
// viscosity eta2; enters the momentum residual with unit coefficient.
inline SparseMat assemble_a2_ns(const DgSpace& sp, double eta1, double eta2, double sigma)
{
    const Mesh& m = *sp.mesh;
    const int d = m.dim, nm = sp.nmodes;
    const double alpha = eta1 - 2.0 * eta2 / d;
    std::vector<Triplet> trip;
    auto dof = [&](int e, int c, int i) { return (e * d + c) * nm + i; };

    for (int e = 0; e < m.num_elements(); ++e)
        for (int q = 0; q < sp.nvq; ++q) {
            size_t qq = static_cast<size_t>(e) * sp.nvq + q;
            double w = sp.vol_weight[qq];
            for (int i = 0; i < nm; ++i) {
                Vec gi = sp.vol_grad[qq * nm + i];
                for (int j = 0; j < nm; ++j) {
                    Vec gj = sp.vol_grad[qq * nm + j];
                    for (int ci = 0; ci < d; ++ci)
                        for (int cj = 0; cj < d; ++cj) {
                            // -[alpha div(u) div(x) + eta2 (Du+Du^T):Dx]
                            double val = -alpha * gj[cj] * gi[ci];
                            val -= eta2 * ((ci == cj ? gi.dot(gj) : 0.0) + gj[ci] * gi[cj]);
                            trip.emplace_back(dof(e, ci, i), dof(e, cj, j), w * val);
                        }
                }
            }
        }

    for (int f = 0; f < m.num_facets(); ++f) {
        const Facet& fc = m.facets[f];
        bool bnd = fc.boundary();
        double avg = bnd ? 1.0 : 0.5;
        double pen = sigma / fc.h;
        int nsides = bnd ? 1 : 2;
        const Vec& n = fc.normal;
        for (int q = 0; q < sp.nfq; ++q) {
            size_t qq = static_cast<size_t>(f) * sp.nfq + q;
            double w = sp.facet_weight[qq];
            for (int su = 0; su < nsides; ++su)
                for (int sx = 0; sx < nsides; ++sx) {
                    int eu = fc.elem[su], ex = fc.elem[sx];
                    double gu = su == 0 ? 1.0 : -1.0;
                    double gx = sx == 0 ? 1.0 : -1.0;
                    for (int i = 0; i < nm; ++i) {
                        double xv = sp.facet_val[sx][qq * nm + i];
                        Vec xg = sp.facet_grad[sx][qq * nm + i];
                        for (int j = 0; j < nm; ++j) {
                            double uv = sp.facet_val[su][qq * nm + j];
                            Vec ug = sp.facet_grad[su][qq * nm + j];
                            for (int ci = 0; ci < d; ++ci)
                                for (int cj = 0; cj < d; ++cj) {
                                    // alpha [ jump{u}.avg{div x} + avg{div u} jump{x} ]
                                    double val = alpha * (gu * uv * n[cj] * avg * xg[ci] +
                                                          avg * ug[cj] * gx * xv * n[ci]);
                                    // eta2 [ (tjump{u}+tjump{u}^T):avg{Dx}
                                    //        + tjump{x}:avg{Du+Du^T} ]
                                    double t1 = gu * uv * avg *
                                                ((ci == cj ? xg.dot(n) : 0.0) + xg[cj] * n[ci]);
                                    double t2 = gx * xv * avg *
                                                ((ci == cj ? ug.dot(n) : 0.0) + ug[ci] * n[cj]);
                                    val += eta2 * (t1 + t2);
                                    // penalty over interior and boundary facets
                                    if (ci == cj) val -= pen * gu * gx * uv * xv;
                                    trip.emplace_back(dof(ex, ci, i), dof(eu, cj, j), w * val);
                                }
                        }
                    }
                }
        }
    }

    SparseMat M(sp.field_size(d), sp.field_size(d));
    M.setFromTriplets(trip.begin(), trip.end());
    return M;
}

// Discrete gradient: (G s)_i = int grad s . tau_i - int_E jump{s}.avg{tau_i}
// over interior facets (rows: vector dofs, cols: scalar dofs).
inline SparseMat assemble_gradient(const DgSpace& sp)
{
    const Mesh& m = *sp.mesh;
    const int d = m.dim, nm = sp.nmodes;
    std::vector<Triplet> trip;
    auto vdof = [&](int e, int c, int i) { return (e * d + c) * nm + i; };

    for (int e = 0; e < m.num_elements(); ++e)
        for (int q = 0; q < sp.nvq; ++q) {
            size_t qq = static_cast<size_t>(e) * sp.nvq + q;
            double w = sp.vol_weight[qq];
            for (int i = 0; i < nm; ++i) {
                double ti = sp.vol_val[qq * nm + i];
                for (int j = 0; j < nm; ++j) {
                    const Vec& gj = sp.vol_grad[qq * nm + j];
                    for (int c = 0; c < d; ++c)
                        trip.emplace_back(vdof(e, c, i), e * nm + j, w * gj[c] * ti);
                }
            }
        }

    for (int f = 0; f < m.num_facets(); ++f) {
        const Facet& fc = m.facets[f];
        if (fc.boundary()) continue;
        const Vec& n = fc.normal;
        for (int q = 0; q < sp.nfq; ++q) {
            size_t qq = static_cast<size_t>(f) * sp.nfq + q;
            double w = sp.facet_weight[qq];
            for (int ss = 0; ss < 2; ++ss)
                for (int st = 0; st < 2; ++st) {
                    double gs = ss == 0 ? 1.0 : -1.0;
                    for (int i = 0; i < nm; ++i) {
                        double tv = 0.5 * sp.facet_val[st][qq * nm + i];
                        for (int j = 0; j < nm; ++j) {
                            double sv = sp.facet_val[ss][qq * nm + j];
                            for (int c = 0; c < d; ++c)
                                trip.emplace_back(vdof(fc.elem[st], c, i), fc.elem[ss] * nm + j,
                                                  -w * gs * n[c] * sv * tv);
                        }
                    }
                }
        }
    }

    SparseMat M(sp.field_size(d), sp.scalar_size());
    M.setFromTriplets(trip.begin(), trip.end());
    return M;
}

} // namespace qinsk
