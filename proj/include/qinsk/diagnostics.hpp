// ============================================================================
// qinsk/diagnostics.hpp - energy, mass and error functionals over states
//
// The reported energy is the audited quantity of the scheme's dissipation
// identity:
//     E = int W(phi_h) + rho(phi_h)|v_h|^2/2 + gamma |q_h|^2/2 + P
// with the body-force potential P = int rho(phi_h) (g.x - omega^2 |x|^2/2)
// included whenever gravity or rotation is active (P = 0 otherwise).  All
// integrals use the scheme's own quadrature, so the audited identity is the
// one the scheme satisfies exactly, not a higher-accuracy re-quadrature.
// Note that evaluating P with the raw potential is exact here: rho(phi_h)
// is itself a broken polynomial, so the L2-projection error of the
// potential integrates against it to zero.
// ============================================================================
#pragma once

#include "qinsk/scheme.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qinsk {

// ----------------------------------------------------------------------------
// Energy, mass, velocity functionals
// ----------------------------------------------------------------------------

inline double discrete_energy(const DgSpace& sp, const ModelParams& mp,
                              const SchemeOptions& opts, const State& st)
{
    const int nm = sp.nmodes, d = sp.mesh->dim;
    const bool body = opts.omega != 0.0 || opts.gravity.squaredNorm() != 0.0;
    double E = 0.0;
    for (int e = 0; e < sp.mesh->num_elements(); ++e)
        for (int q = 0; q < sp.nvq; ++q) {
            const size_t qq = static_cast<size_t>(e) * sp.nvq + q;
            const double w = sp.vol_weight[qq];
            const double* bv = &sp.vol_val[qq * nm];
            double ph = 0.0;
            for (int i = 0; i < nm; ++i) ph += st.phi[e * nm + i] * bv[i];
            double v2 = 0.0;
            for (int c = 0; c < d; ++c) {
                double vc = 0.0;
                for (int i = 0; i < nm; ++i) vc += st.v[(e * d + c) * nm + i] * bv[i];
                v2 += vc * vc;
            }
            double val = well(ph, mp.well_A) + 0.5 * mp.density(ph) * v2;
            if (body) {
                const Vec& x = sp.vol_qpoint[qq];
                val += mp.density(ph) *
                       (opts.gravity.dot(x) - 0.5 * opts.omega * opts.omega * x.squaredNorm());
            }
            E += w * val;
        }
    // |q_h|^2 integrates to the coefficient norm in an orthonormal basis
    E += 0.5 * mp.gamma * st.q.squaredNorm();
    return E;
}

inline double discrete_energy(const Scheme& sch, const State& st)
{
    return discrete_energy(sch.space(), sch.model(), sch.options(), st);
}

// The body-force potential part of the energy (zero without body forces).
inline double potential_correction(const DgSpace& sp, const ModelParams& mp,
                                   const SchemeOptions& opts, const State& st)
{
    if (opts.omega == 0.0 && opts.gravity.squaredNorm() == 0.0) return 0.0;
    const int nm = sp.nmodes;
    double P = 0.0;
    for (int e = 0; e < sp.mesh->num_elements(); ++e)
        for (int q = 0; q < sp.nvq; ++q) {
            const size_t qq = static_cast<size_t>(e) * sp.nvq + q;
            const double* bv = &sp.vol_val[qq * nm];
            double ph = 0.0;
            for (int i = 0; i < nm; ++i) ph += st.phi[e * nm + i] * bv[i];
            const Vec& x = sp.vol_qpoint[qq];
            P += sp.vol_weight[qq] * mp.density(ph) *
                 (opts.gravity.dot(x) - 0.5 * opts.omega * opts.omega * x.squaredNorm());
        }
    return P;
}

inline double total_mass(const DgSpace& sp, const ModelParams& mp, const State& st)
{
    const int nm = sp.nmodes;
    double M = 0.0;
    for (int e = 0; e < sp.mesh->num_elements(); ++e)
        for (int q = 0; q < sp.nvq; ++q) {
            const size_t qq = static_cast<size_t>(e) * sp.nvq + q;
            const double* bv = &sp.vol_val[qq * nm];
            double ph = 0.0;
            for (int i = 0; i < nm; ++i) ph += st.phi[e * nm + i] * bv[i];
            M += sp.vol_weight[qq] * mp.density(ph);
        }
    return M;
}

inline double total_mass(const Scheme& sch, const State& st)
{
    return total_mass(sch.space(), sch.model(), st);
}

// Max of |v_h| over all volume quadrature points.
inline double max_velocity(const DgSpace& sp, const State& st)
{
    const int nm = sp.nmodes, d = sp.mesh->dim;
    double vmax = 0.0;
    for (int e = 0; e < sp.mesh->num_elements(); ++e)
        for (int q = 0; q < sp.nvq; ++q) {
            const size_t qq = static_cast<size_t>(e) * sp.nvq + q;
            const double* bv = &sp.vol_val[qq * nm];
            double v2 = 0.0;
            for (int c = 0; c < d; ++c) {
                double vc = 0.0;
                for (int i = 0; i < nm; ++i) vc += st.v[(e * d + c) * nm + i] * bv[i];
                v2 += vc * vc;
            }
            vmax = std::max(vmax, v2);
        }
    return std::sqrt(vmax);
}

// ----------------------------------------------------------------------------
// Energy-dissipation audit
// ----------------------------------------------------------------------------

// Residual of the discrete energy equality over one step,
//   E(new) - E(old) + k ( m_r ||a||^2 - m_j A1(a,a) - Avisc(v,v) )
// with all dissipation terms at midpoints; near machine zero for converged
// steps of the scheme.
inline double step_energy_deviation(const Scheme& sch, const State& s0, const State& s1, double k)
{
    const ModelParams& mp = sch.model();
    Eigen::VectorXd ah = 0.5 * (s0.a + s1.a);
    Eigen::VectorXd vh = 0.5 * (s0.v + s1.v);
    const double diss = mp.m_r * ah.squaredNorm() - mp.m_j * ah.dot(sch.a1() * ah) -
                        vh.dot(sch.avisc() * vh);
    return discrete_energy(sch, s1) - discrete_energy(sch, s0) + k * diss;
}

// Per-step summary row; `prev` may be null for the initial state.
struct EnergyReport {
    double t = 0.0;
    int step = 0;
    double energy = 0.0;                // audited energy, potential included
    double potential_correction = 0.0;  // body-force potential part of `energy`
    double mass = 0.0;
    double deviation = 0.0;  // zero for the initial state
    double max_velocity = 0.0;
    double diss_reactive = 0.0;
    double diss_diffusive = 0.0;
    double diss_viscous = 0.0;
};

inline EnergyReport energy_report(const Scheme& sch, const State& st, const State* prev = nullptr,
                                  double k = 0.0)
{
    EnergyReport rep;
    rep.t = st.t;
    rep.step = st.step;
    rep.energy = discrete_energy(sch, st);
    rep.potential_correction = potential_correction(sch.space(), sch.model(), sch.options(), st);
    rep.mass = total_mass(sch, st);
    rep.max_velocity = max_velocity(sch.space(), st);
    if (prev) {
        const ModelParams& mp = sch.model();
        Eigen::VectorXd ah = 0.5 * (prev->a + st.a);
        Eigen::VectorXd vh = 0.5 * (prev->v + st.v);
        rep.diss_reactive = mp.m_r * ah.squaredNorm();
        rep.diss_diffusive = -mp.m_j * ah.dot(sch.a1() * ah);
        rep.diss_viscous = -vh.dot(sch.avisc() * vh);
        rep.deviation = discrete_energy(sch, st) - discrete_energy(sch, *prev) +
                        k * (rep.diss_reactive + rep.diss_diffusive + rep.diss_viscous);
    }
    return rep;
}

// ----------------------------------------------------------------------------
// Errors against a reference solution
// ----------------------------------------------------------------------------

enum class Field { phi, v, lambda };

// L-infinity (over the recorded states) of the L2 (over the domain) error of
// one field against a callable reference.  The callable fills `out` with one
// component for phi/lambda and `dim` components for v, given (x, t).
inline double field_error_norm(
    const DgSpace& sp, const std::vector<State>& trajectory,
    const std::function<void(const Vec& x, double t, double* out)>& exact, Field which)
{
    const int nm = sp.nmodes, d = sp.mesh->dim;
    const int ncomp = which == Field::v ? d : 1;
    double worst = 0.0;
    double ex[2];
    for (const State& st : trajectory) {
        const Eigen::VectorXd& coef =
            which == Field::phi ? st.phi : (which == Field::v ? st.v : st.lambda);
        double err2 = 0.0;
        for (int e = 0; e < sp.mesh->num_elements(); ++e)
            for (int q = 0; q < sp.nvq; ++q) {
                const size_t qq = static_cast<size_t>(e) * sp.nvq + q;
                const double* bv = &sp.vol_val[qq * nm];
                exact(sp.vol_qpoint[qq], st.t, ex);
                double diff2 = 0.0;
                for (int c = 0; c < ncomp; ++c) {
                    double uc = 0.0;
                    for (int i = 0; i < nm; ++i) uc += coef[(e * ncomp + c) * nm + i] * bv[i];
                    const double dc = uc - ex[c];
                    diff2 += dc * dc;
                }
                err2 += sp.vol_weight[qq] * diff2;
            }
        worst = std::max(worst, err2);
    }
    return std::sqrt(worst);
}

// Experimental orders of convergence from (N, error) pairs:
//   EOC_i = log(e_{i-1}/e_i) / log(N_i/N_{i-1}) .
inline std::vector<double> estimate_eoc(const std::vector<std::pair<double, double>>& errors)
{
    std::vector<double> eoc;
    for (const auto& [N, e] : errors)
        if (!(e > 0.0) || !(N > 0.0))
            throw std::domain_error("estimate_eoc: sizes and errors must be positive");
    for (size_t i = 1; i < errors.size(); ++i) {
        if (errors[i].first <= errors[i - 1].first)
            throw std::domain_error("estimate_eoc: sizes must increase");
        eoc.push_back(std::log(errors[i - 1].second / errors[i].second) /
                      std::log(errors[i].first / errors[i - 1].first));
    }
    return eoc;
}

} // namespace qinsk
