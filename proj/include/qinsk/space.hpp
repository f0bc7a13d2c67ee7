// ============================================================================
// qinsk/space.hpp - broken (discontinuous) polynomial spaces P_p on a mesh
//
// The space tabulates, once, the orthonormal modal basis at all volume and
// facet quadrature points, including physical gradients per element.  With
// the orthonormal basis the element mass matrix is the identity, so L2
// projection needs no linear solve and coefficient inner products equal
// L2 inner products of the fields.
//
// Coefficient layout for a field with `ncomp` components:
//     index = (element * ncomp + comp) * nmodes + mode
// Scalar fields have ncomp = 1, vector fields ncomp = mesh.dim.
//
// The default quadrature degree is max(4p, 2p+2): enough to integrate the
// quartic double well of a degree-p field exactly, which is what makes the
// discrete energy identity hold to round-off.
// ============================================================================
#pragma once

#include "qinsk/basis.hpp"
#include "qinsk/mesh.hpp"
#include "qinsk/quadrature.hpp"

#include <cstdint>
#include <functional>

namespace qinsk {

inline int default_quad_degree(int degree)
{
    return std::max(4 * degree, 2 * degree + 2);
}

struct DgSpace {
    const Mesh* mesh = nullptr;
    int degree = 1;
    int nmodes = 0;
    int quad_degree = 0;

    QuadRule vrule;  // reference volume rule
    int nvq = 0;     // volume points per element
    int nfq = 0;     // quadrature points per facet

    // Volume tabulation, layout [(e*nvq + q)*nmodes + i]
    std::vector<Vec> vol_qpoint;      // physical coordinates [(e*nvq+q)]
    std::vector<double> vol_weight;   // physical weights     [(e*nvq+q)]
    std::vector<double> vol_val;      // physical basis values
    std::vector<Vec> vol_grad;        // physical basis gradients

    // Facet tabulation, layout [(f*nfq + q)*nmodes + i], per side
    std::vector<Vec> facet_qpoint;    // physical coordinates [(f*nfq+q)]
    std::vector<double> facet_weight; // physical weights     [(f*nfq+q)]
    std::array<std::vector<double>, 2> facet_val;
    std::array<std::vector<Vec>, 2> facet_grad;

    DgSpace() = default;
    DgSpace(const Mesh& m, int p, int qdeg = -1) { build(m, p, qdeg); }

    void build(const Mesh& m, int p, int qdeg = -1)
    {
        if (p < 0) throw std::invalid_argument("DgSpace: degree must be >= 0");
        mesh = &m;
        degree = p;
        nmodes = space_dimension(m.dim, p);
        quad_degree = qdeg < 0 ? default_quad_degree(p) : qdeg;

        vrule = (m.dim == 1) ? interval_rule(quad_degree) : triangle_rule(quad_degree);
        nvq = vrule.size();
        QuadRule frule = facet_rule(m.dim, quad_degree);
        nfq = frule.size();

        // Reference basis at the volume points.
        std::vector<std::vector<double>> rv(nvq);
        std::vector<std::vector<Vec>> rg(nvq);
        for (int q = 0; q < nvq; ++q) basis_eval(m.dim, p, vrule.points[q], rv[q], rg[q]);

        const int ne = m.num_elements();
        vol_qpoint.resize(static_cast<size_t>(ne) * nvq);
        vol_weight.resize(static_cast<size_t>(ne) * nvq);
        vol_val.resize(static_cast<size_t>(ne) * nvq * nmodes);
        vol_grad.resize(static_cast<size_t>(ne) * nvq * nmodes);
        for (int e = 0; e < ne; ++e) {
            const auto& g = m.geom[e];
            double s = 1.0 / std::sqrt(g.det);
            Mat2 JinvT = g.Jinv.transpose();
            for (int q = 0; q < nvq; ++q) {
                size_t qq = static_cast<size_t>(e) * nvq + q;
                vol_qpoint[qq] = m.map_to_physical(e, vrule.points[q]);
                vol_weight[qq] = vrule.weights[q] * g.det;
                for (int i = 0; i < nmodes; ++i) {
                    vol_val[qq * nmodes + i] = rv[q][i] * s;
                    vol_grad[qq * nmodes + i] = (JinvT * rg[q][i]) * s;
                }
            }
        }

        // Facet tabulation.  A facet quadrature point has one global
        // position; its reference preimage in each neighbour comes from the
        // (exact) inverse affine map.
        const int nf = m.num_facets();
        facet_qpoint.resize(static_cast<size_t>(nf) * nfq);
        facet_weight.resize(static_cast<size_t>(nf) * nfq);
        for (int s = 0; s < 2; ++s) {
            facet_val[s].assign(static_cast<size_t>(nf) * nfq * nmodes, 0.0);
            facet_grad[s].assign(static_cast<size_t>(nf) * nfq * nmodes, Vec::Zero());
        }
        std::vector<double> bv;
        std::vector<Vec> bg;
        for (int f = 0; f < nf; ++f) {
            const Facet& fc = m.facets[f];
            for (int q = 0; q < nfq; ++q) {
                size_t qq = static_cast<size_t>(f) * nfq + q;
                Vec x;
                if (m.dim == 1) {
                    x = m.vertices[fc.verts[0]];
                } else {
                    double t = frule.points[q][0];
                    x = m.vertices[fc.verts[0]] +
                        t * (m.vertices[fc.verts[1]] - m.vertices[fc.verts[0]]);
                }
                facet_qpoint[qq] = x;
                facet_weight[qq] = frule.weights[q] * fc.measure;
                for (int s = 0; s < 2; ++s) {
                    int e = fc.elem[s];
                    if (e < 0) continue;
                    const auto& g = m.geom[e];
                    Vec xi = m.map_to_reference(e, x);
                    basis_eval(m.dim, p, xi, bv, bg);
                    double sc = 1.0 / std::sqrt(g.det);
                    Mat2 JinvT = g.Jinv.transpose();
                    for (int i = 0; i < nmodes; ++i) {
                        facet_val[s][qq * nmodes + i] = bv[i] * sc;
                        facet_grad[s][qq * nmodes + i] = (JinvT * bg[i]) * sc;
                    }
                }
            }
        }
    }

    int scalar_size() const { return mesh->num_elements() * nmodes; }
    int field_size(int ncomp) const { return mesh->num_elements() * ncomp * nmodes; }
    int dof(int e, int comp, int ncomp, int mode) const
    {
        return (e * ncomp + comp) * nmodes + mode;
    }
};

// L2 projection of a callable f(x) -> (ncomp values) into the space.
// With the orthonormal basis, coefficients are plain quadrature sums.
inline Eigen::VectorXd l2_project(
    const DgSpace& sp, int ncomp,
    const std::function<void(const Vec&, double*)>& f)
{
    Eigen::VectorXd out = Eigen::VectorXd::Zero(sp.field_size(ncomp));
    std::vector<double> fv(ncomp);
    for (int e = 0; e < sp.mesh->num_elements(); ++e)
        for (int q = 0; q < sp.nvq; ++q) {
            size_t qq = static_cast<size_t>(e) * sp.nvq + q;
            f(sp.vol_qpoint[qq], fv.data());
            double w = sp.vol_weight[qq];
            for (int c = 0; c < ncomp; ++c)
                for (int i = 0; i < sp.nmodes; ++i)
                    out[sp.dof(e, c, ncomp, i)] += w * fv[c] * sp.vol_val[qq * sp.nmodes + i];
        }
    return out;
}

inline Eigen::VectorXd l2_project_scalar(const DgSpace& sp,
                                         const std::function<double(const Vec&)>& f)
{
    return l2_project(sp, 1, [&](const Vec& x, double* out) { out[0] = f(x); });
}

// Evaluate a coefficient field at a reference point of one element.
// `value` receives ncomp entries; `grad`, if non-null, ncomp gradients.
inline void eval_field(const DgSpace& sp, int ncomp, const Eigen::VectorXd& coef,
                       int e, const Vec& xi, double* value, Vec* grad = nullptr)
{
    std::vector<double> bv;
    std::vector<Vec> bg;
    basis_eval(sp.mesh->dim, sp.degree, xi, bv, bg);
    const auto& g = sp.mesh->geom[e];
    double sc = 1.0 / std::sqrt(g.det);
    Mat2 JinvT = g.Jinv.transpose();
    for (int c = 0; c < ncomp; ++c) {
        double v = 0.0;
        Vec gr = Vec::Zero();
        for (int i = 0; i < sp.nmodes; ++i) {
            double ci = coef[sp.dof(e, c, ncomp, i)];
            v += ci * bv[i] * sc;
            if (grad) gr += ci * (JinvT * bg[i]) * sc;
        }
        value[c] = v;
        if (grad) grad[c] = gr;
    }
}

// Traces of a field on both sides of a facet at the facet quadrature points.
// values[s][q*ncomp + c]; the second side of a boundary facet is left empty.
inline void facet_traces(const DgSpace& sp, int ncomp, const Eigen::VectorXd& coef,
                         int f, std::array<std::vector<double>, 2>& values)
{
    const Facet& fc = sp.mesh->facets[f];
    for (int s = 0; s < 2; ++s) {
        values[s].clear();
        if (fc.elem[s] < 0) continue;
        values[s].assign(static_cast<size_t>(sp.nfq) * ncomp, 0.0);
        for (int q = 0; q < sp.nfq; ++q) {
            size_t qq = static_cast<size_t>(f) * sp.nfq + q;
            for (int c = 0; c < ncomp; ++c) {
                double v = 0.0;
                for (int i = 0; i < sp.nmodes; ++i)
                    v += coef[sp.dof(fc.elem[s], c, ncomp, i)] *
                         sp.facet_val[s][qq * sp.nmodes + i];
                values[s][static_cast<size_t>(q) * ncomp + c] = v;
            }
        }
    }
}

// ----------------------------------------------------------------------------
// Deterministic random vertex fields.
//
// PRNG: SplitMix64 (public domain), fully specified so runs reproduce across
// platforms.  Vertex k receives the k-th draw mapped to uniform(-1,1); the
// field is the continuous piecewise-linear interpolant of those vertex
// values scaled by `amplitude`, L2-projected into the space (exact for
// p >= 1, so interior jumps are zero).
// ----------------------------------------------------------------------------
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}
    std::uint64_t next()
    {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
    // uniform in [-1, 1)
    double uniform_pm1() { return 2.0 * ((next() >> 11) * 0x1.0p-53) - 1.0; }
};

inline Eigen::VectorXd random_vertex_field(const DgSpace& sp, std::uint64_t seed,
                                           double amplitude)
{
    const Mesh& m = *sp.mesh;
    SplitMix64 rng(seed);
    std::vector<double> vertex_val(m.num_vertices());
    for (auto& v : vertex_val) v = amplitude * rng.uniform_pm1();

    // P1 interpolant evaluated via barycentric coordinates of the owner
    // element; projecting it is exact for p >= 1.
    Eigen::VectorXd out = Eigen::VectorXd::Zero(sp.scalar_size());
    for (int e = 0; e < m.num_elements(); ++e) {
        const auto& el = m.elements[e];
        for (int q = 0; q < sp.nvq; ++q) {
            size_t qq = static_cast<size_t>(e) * sp.nvq + q;
            const Vec& xi = sp.vrule.points[q];
            double val;
            if (m.dim == 1)
                val = (1.0 - xi[0]) * vertex_val[el[0]] + xi[0] * vertex_val[el[1]];
            else
                val = (1.0 - xi[0] - xi[1]) * vertex_val[el[0]] +
                      xi[0] * vertex_val[el[1]] + xi[1] * vertex_val[el[2]];
            double w = sp.vol_weight[qq];
            for (int i = 0; i < sp.nmodes; ++i)
                out[sp.dof(e, 0, 1, i)] += w * val * sp.vol_val[qq * sp.nmodes + i];
        }
    }
    return out;
}

} // namespace qinsk
