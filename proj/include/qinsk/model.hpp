// ============================================================================
// qinsk/model.hpp - material data of the quasi-incompressible two-phase model
//
// Two incompressible constituents with densities rho1 (phase phi = +1) and
// rho2 (phase phi = -1) mix with total density
//     rho(phi) = [rho1 (1 + phi) + rho2 (1 - phi)] / 2,
// and the constants c+- = 1/rho1 +- 1/rho2 encode the quasi-incompressibility
// coupling.  The free energy density is the quartic double well
//     W(phi) = (phi^2 - 1)^2,
// optionally augmented by a convex penalty
//     + 4 A [ max(phi - 1, 0)^2 + max(-phi - 1, 0)^2 ]
// used at high density ratios (A ~ (rho2/rho1)^2) to keep rho(phi) positive.
//
// The time discretisation needs the difference quotient
//     DQ(u, w) = (W(w) - W(u)) / (w - u),
// which is what makes the discrete energy balance exact.  For the quartic
// part we evaluate the exact Taylor form about the midpoint,
//     DQ = W'(m) + W'''(m) d^2 / 24,   m = (u+w)/2,  d = w - u,
// which never divides.  For the penalty part we use the secant with a
// coincidence-limit branch for small |d|.
// ============================================================================
#pragma once

#include "qinsk/common.hpp"

#include <cmath>

namespace qinsk {

struct ModelParams {
    double rho1 = 1.0;   // density of phase phi = +1
    double rho2 = 2.0;   // density of phase phi = -1
    double gamma = 1e-3; // capillarity constant
    double eta = 1e-3;   // viscosity (simplified stress, Frobenius form)
    double eta1 = 0.0;   // bulk viscosity  (full Navier-Stokes tensor)
    double eta2 = 0.0;   // shear viscosity (full Navier-Stokes tensor)
    double m_r = 1e-2;   // reactive mobility
    double m_j = 1e-2;   // diffusive mobility
    double well_A = 0.0; // penalty strength of the modified double well

    double c_plus() const { return 1.0 / rho1 + 1.0 / rho2; }
    double c_minus() const { return 1.0 / rho1 - 1.0 / rho2; }

    double density(double phi) const
    {
        return 0.5 * (rho1 * (1.0 + phi) + rho2 * (1.0 - phi));
    }
    // d rho / d phi, a constant
    double density_slope() const { return 0.5 * (rho1 - rho2); }

    void validate() const
    {
        if (!(rho1 > 0.0) || !(rho2 > 0.0))
            throw std::invalid_argument("model: constituent densities must be positive");
        if (!(gamma > 0.0))
            throw std::invalid_argument("model: gamma must be positive");
        if (!(m_r > 0.0) || !(m_j > 0.0))
            throw std::invalid_argument("model: mobilities m_r, m_j must be positive");
        if (eta < 0.0 || eta1 < 0.0 || eta2 < 0.0)
            throw std::invalid_argument("model: viscosities must be nonnegative");
        if (well_A < 0.0)
            throw std::invalid_argument("model: well penalty must be nonnegative");
    }
};

// --------------------------------------------------------------------------
// Double well.  well_* take the penalty strength A explicitly so the model
// functions stay free functions usable in tests.
// --------------------------------------------------------------------------
inline double well_penalty_pos(double phi) { return std::max(phi - 1.0, 0.0); }
inline double well_penalty_neg(double phi) { return std::max(-phi - 1.0, 0.0); }

inline double well(double phi, double A = 0.0)
{
    double s = phi * phi - 1.0;
    double g = well_penalty_pos(phi), h = well_penalty_neg(phi);
    return s * s + 4.0 * A * (g * g + h * h);
}

inline double well_d(double phi, double A = 0.0)
{
    return 4.0 * phi * (phi * phi - 1.0) +
           8.0 * A * (well_penalty_pos(phi) - well_penalty_neg(phi));
}

inline double well_dd(double phi, double A = 0.0)
{
    double pen = (phi > 1.0 || phi < -1.0) ? 8.0 * A : 0.0;
    return 12.0 * phi * phi - 4.0 + pen;
}

// Chemical "pressure" p(phi) = phi W'(phi) - W(phi); diagnostic only.
inline double well_pressure(double phi, double A = 0.0)
{
    return phi * well_d(phi, A) - well(phi, A);
}

// --------------------------------------------------------------------------
// Difference quotient (W(w) - W(u)) / (w - u) and its derivative w.r.t. the
// NEW value w.  Exact up to round-off for every u, w including u == w.
// --------------------------------------------------------------------------
inline double well_dq(double u, double w, double A = 0.0)
{
    double m = 0.5 * (u + w), d = w - u;
    // quartic part via the exact midpoint Taylor form: W'(m) + W'''(m) d^2/24
    double v = 4.0 * m * (m * m - 1.0) + m * d * d;
    if (A != 0.0) {
        double gu = well_penalty_pos(u), gw = well_penalty_pos(w);
        double hu = well_penalty_neg(u), hw = well_penalty_neg(w);
        if (std::abs(d) < 1e-7) {
            // coincidence limit: P'(m)
            v += 8.0 * A * (well_penalty_pos(m) - well_penalty_neg(m));
        } else {
            // max(.,0) is 1-Lipschitz, so these slopes are in [-1,1] and the
            // secant is evaluated without catastrophic cancellation
            double sg = (gw - gu) / d, sh = (hw - hu) / d;
            v += 4.0 * A * ((gw + gu) * sg + (hw + hu) * sh);
        }
    }
    return v;
}

inline double well_dq_dw(double u, double w, double A = 0.0)
{
    double m = 0.5 * (u + w), d = w - u;
    double v = 6.0 * m * m - 2.0 + 0.5 * d * d + 2.0 * m * d;
    if (A != 0.0) {
        if (std::abs(d) < 1e-7) {
            // limit of the secant derivative: P''(m) / 2
            v += (m > 1.0 || m < -1.0) ? 4.0 * A : 0.0;
        } else {
            double gu = well_penalty_pos(u), gw = well_penalty_pos(w);
            double hu = well_penalty_neg(u), hw = well_penalty_neg(w);
            double sg = (gw - gu) / d, sh = (hw - hu) / d;
            double dq_pen = 4.0 * A * ((gw + gu) * sg + (hw + hu) * sh);
            double dP_w = 8.0 * A * (gw - hw);
            v += (dP_w - dq_pen) / d;
        }
    }
    return v;
}

// --------------------------------------------------------------------------
// 1D steady interface profile phi(x) = tanh(x sqrt(2/gamma)): a stationary
// solution of the model with the plain quartic well and v = 0, lambda = 0.
// --------------------------------------------------------------------------
inline double tanh_profile(double x, double gamma)
{
    return std::tanh(x * std::sqrt(2.0 / gamma));
}

} // namespace qinsk
