// ============================================================================
// qinsk/scheme.hpp - the energy-consistent midpoint scheme for the
// quasi-incompressible two-phase flow model
//
// One time step advances six broken-P_p fields
//     phi     phase field
//     v       barycentric velocity
//     lambda  incompressibility multiplier
//     a       scaled chemical potential  c+ mu + c- lambda
//     b       generalized pressure       lambda + (rho1+rho2)/8 (|v1|^2+|v0|^2)
//     q       discrete gradient of phi
// by solving the coupled nonlinear system R(state0, state1) = 0 with a
// Newton method.  Equations are evaluated at field midpoints (Crank-
// Nicolson style); the double well enters through the exact difference
// quotient (W(phi1)-W(phi0))/(phi1-phi0), which is what turns the energy
// *estimate* of the continuous model into a discrete *identity*:
//
//   E(state1) - E(state0)
//     = -k [ m_r ||a||^2  -  m_j A1(a, a)  -  Avisc(v, v) ]   (all at midpoints)
//
// with E = int W(phi) + rho(phi)|v|^2/2 + gamma |q|^2/2 (+ body potential).
// Every pairing in that identity is either pointwise at quadrature points,
// exact coefficient algebra (matrix transposes), or an elementwise
// integration-by-parts identity that the default quadrature degree
// integrates exactly.  The same structure makes int rho(phi) exactly
// conserved.  Tests assert both statements to solver tolerance.
//
// Facet conventions: the transport, q-divergence and velocity-divergence
// terms run over interior *and* boundary facets, so those operators are
// exact transposes of the discrete gradient and the weak no-flux boundary
// conditions pair consistently in the energy identity.  The convective,
// coupling and body-force facet corrections run over interior facets only.
//
// Body forces (gravity, rotating frame) are applied through the L2-projected
// potential  zeta = Pi(g.x - omega^2 |x|^2 / 2):
//     F(Xi) = int rho ∇zeta . Xi - int_E jump{zeta} avg{rho Xi} ,
// which pairs to the exact potential-energy difference because
// c-(rho1+rho2)/2 + c+(rho1-rho2)/2 = 0.  With the raw (unprojected)
// potential the identity would hold only up to O(h^p).  The Coriolis force
// 2 rho Omega x v is pointwise energy-neutral and needs no correction.
// ============================================================================
#pragma once

#include "qinsk/forms.hpp"
#include "qinsk/model.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#ifdef QINSK_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qinsk {

// ----------------------------------------------------------------------------
// Time stepping data types
// ----------------------------------------------------------------------------

struct State {
    double t = 0.0;
    int step = 0;
    Eigen::VectorXd phi;     // scalar field, layout  e*nmodes + i
    Eigen::VectorXd v;       // vector field, layout (e*dim + c)*nmodes + i
    Eigen::VectorXd lambda;  // scalar
    Eigen::VectorXd a;       // scalar
    Eigen::VectorXd b;       // scalar
    Eigen::VectorXd q;       // vector
};

struct TimeGrid {
    double k = 0.01;  // uniform step size
    int steps = 1;    // number of steps to take
};

struct NewtonSettings {
    double tolerance = 1e-10;  // max-norm of the assembled residual
    int max_iterations = 25;
    int max_backtracks = 10;  // step halvings per iteration
    // automatic picks UMFPACK when compiled in, Eigen's SparseLU otherwise
    enum class Solver { automatic, sparse_lu, umfpack, bicgstab };
    Solver solver = Solver::automatic;
    double linear_tolerance = 1e-12;  // iterative linear solver only
};

class NewtonFailure : public std::runtime_error {
public:
    NewtonFailure(const std::string& what, int step_index, int iters, double res)
        : std::runtime_error(what), step(step_index), iterations(iters), residual(res)
    {
    }
    int step;         // index of the step that failed (1-based target step)
    int iterations;   // Newton iterations performed
    double residual;  // last residual max-norm
};

struct StepReport {
    int iterations = 0;
    double residual_norm = 0.0;
    // The three nonnegative dissipation rates of the energy identity,
    // evaluated at the converged midpoints.
    double diss_reactive = 0.0;   //  m_r ||a||^2
    double diss_diffusive = 0.0;  // -m_j A1(a, a)
    double diss_viscous = 0.0;    // -Avisc(v, v)
    double dissipation() const { return diss_reactive + diss_diffusive + diss_viscous; }
};

struct SchemeOptions {
    double sigma = -1.0;          // interior penalty; negative -> min_penalty(p)
    bool full_ns_tensor = false;  // eta1/eta2 stress instead of eta * vector Laplacian
    double omega = 0.0;           // rotating-frame angular velocity (2D only)
    // Momentum source +rho(phi) g . Xi; the physical acceleration is -g, so
    // gravity = (0, 0.01) pulls the mixture toward negative y.
    Vec gravity = Vec::Zero();
    int pin_lambda = -1;  // -1 auto (pin iff c- == 0), 0 off, 1 on
};

struct InitialCondition {
    enum class Kind { steady_tanh, random, bubbles, rotating_bubble, rayleigh_taylor };
    Kind kind = Kind::steady_tanh;
    std::uint64_t seed = 1;    // random case
    double amplitude = 0.01;   // random case
};

// Pointwise body force density in a rotating frame with gravity: the sum of
// centrifugal, Coriolis and gravitational contributions acting on a parcel
// of density rho moving with velocity v at position x.
inline Vec body_force_contribution(const SchemeOptions& opts, int dim, const Vec& x,
                                   double rho, const Vec& v)
{
    if (opts.omega != 0.0 && dim != 2)
        throw std::invalid_argument("body force: rotation requires a two-dimensional domain");
    Vec f = -rho * opts.gravity;
    if (opts.omega != 0.0) {
        const double w = opts.omega;
        f += rho * w * w * x;                                  // -rho W x (W x x)
        f += 2.0 * rho * w * Vec(v[1], -v[0]);                 // -2 rho W x v
    }
    return f;
}

// ----------------------------------------------------------------------------
// Scheme
// ----------------------------------------------------------------------------

class Scheme {
public:
    Scheme(const DgSpace& sp, const ModelParams& mp, SchemeOptions opts = {})
        : sp_(&sp), mp_(mp), opts_(opts)
    {
        mp_.validate();
        d_ = sp.mesh->dim;
        nm_ = sp.nmodes;
        ne_ = sp.mesh->num_elements();
        if (opts_.sigma < 0.0) opts_.sigma = min_penalty(sp.degree);
        if (opts_.omega != 0.0 && d_ != 2)
            throw std::invalid_argument("scheme: rotating frame requires a 2D mesh");
        if (opts_.full_ns_tensor && mp_.eta1 == 0.0 && mp_.eta2 == 0.0)
            throw std::invalid_argument("scheme: full stress tensor needs eta1/eta2");

        A1_ = assemble_a1(sp, opts_.sigma);
        if (opts_.full_ns_tensor)
            Avisc_ = assemble_a2_ns(sp, mp_.eta1, mp_.eta2, opts_.sigma);
        else
            Avisc_ = SparseMat(mp_.eta * assemble_a2(sp, opts_.sigma));
        G_ = assemble_gradient(sp);
        GT_ = SparseMat(G_.transpose());

        pin_ = opts_.pin_lambda < 0 ? (mp_.c_minus() == 0.0) : (opts_.pin_lambda != 0);
        mass_vec_ = l2_project_scalar(sp, [](const Vec&) { return 1.0; });

        has_body_ = opts_.omega != 0.0 || opts_.gravity.squaredNorm() != 0.0;
        if (has_body_) tabulate_body_potential();
    }

    const DgSpace& space() const { return *sp_; }
    const ModelParams& model() const { return mp_; }
    const SchemeOptions& options() const { return opts_; }
    const SparseMat& a1() const { return A1_; }
    const SparseMat& avisc() const { return Avisc_; }
    const SparseMat& gradient_matrix() const { return G_; }
    bool pinned() const { return pin_; }
    // coefficients of the projected body-force potential (empty if none)
    const Eigen::VectorXd& body_potential() const { return zeta_; }

    // ---- unknown layout ----------------------------------------------------
    // Packed element blocks [phi | v | lambda | a | b | q]; with pinning one
    // trailing entry holds the multiplier of the pinning constraint.
    int block() const { return (4 + 2 * d_) * nm_; }
    int packed_size() const { return ne_ * block() + (pin_ ? 1 : 0); }
    int off_phi() const { return 0; }
    int off_v() const { return nm_; }
    int off_lambda() const { return (1 + d_) * nm_; }
    int off_a() const { return (2 + d_) * nm_; }
    int off_b() const { return (3 + d_) * nm_; }
    int off_q() const { return (4 + d_) * nm_; }

    State empty_state() const
    {
        State st;
        st.phi = Eigen::VectorXd::Zero(sp_->scalar_size());
        st.v = Eigen::VectorXd::Zero(sp_->field_size(d_));
        st.lambda = Eigen::VectorXd::Zero(sp_->scalar_size());
        st.a = Eigen::VectorXd::Zero(sp_->scalar_size());
        st.b = Eigen::VectorXd::Zero(sp_->scalar_size());
        st.q = Eigen::VectorXd::Zero(sp_->field_size(d_));
        return st;
    }

    Eigen::VectorXd pack(const State& st, double mu = 0.0) const
    {
        check_state(st);
        Eigen::VectorXd y(packed_size());
        const int B = block();
        for (int e = 0; e < ne_; ++e) {
            for (int i = 0; i < nm_; ++i) {
                y[e * B + off_phi() + i] = st.phi[e * nm_ + i];
                y[e * B + off_lambda() + i] = st.lambda[e * nm_ + i];
                y[e * B + off_a() + i] = st.a[e * nm_ + i];
                y[e * B + off_b() + i] = st.b[e * nm_ + i];
            }
            for (int c = 0; c < d_; ++c)
                for (int i = 0; i < nm_; ++i) {
                    y[e * B + off_v() + c * nm_ + i] = st.v[(e * d_ + c) * nm_ + i];
                    y[e * B + off_q() + c * nm_ + i] = st.q[(e * d_ + c) * nm_ + i];
                }
        }
        if (pin_) y[packed_size() - 1] = mu;
        return y;
    }

    void unpack(const Eigen::VectorXd& y, State& st, double* mu = nullptr) const
    {
        const int B = block();
        for (int e = 0; e < ne_; ++e) {
            for (int i = 0; i < nm_; ++i) {
                st.phi[e * nm_ + i] = y[e * B + off_phi() + i];
                st.lambda[e * nm_ + i] = y[e * B + off_lambda() + i];
                st.a[e * nm_ + i] = y[e * B + off_a() + i];
                st.b[e * nm_ + i] = y[e * B + off_b() + i];
            }
            for (int c = 0; c < d_; ++c)
                for (int i = 0; i < nm_; ++i) {
                    st.v[(e * d_ + c) * nm_ + i] = y[e * B + off_v() + c * nm_ + i];
                    st.q[(e * d_ + c) * nm_ + i] = y[e * B + off_q() + c * nm_ + i];
                }
        }
        if (mu) *mu = pin_ ? y[packed_size() - 1] : 0.0;
    }

    // ---- initial states ------------------------------------------------------

    State initial_state(const InitialCondition& ic) const
    {
        const DgSpace& sp = *sp_;
        State st = empty_state();
        using K = InitialCondition::Kind;
        switch (ic.kind) {
        case K::steady_tanh: {
            if (d_ != 1)
                throw std::invalid_argument("initial state: steady-tanh needs a 1D mesh");
            const double g = mp_.gamma;
            st.phi = l2_project_scalar(sp, [g](const Vec& x) { return tanh_profile(x[0], g); });
            break;
        }
        case K::random:
            st.phi = random_vertex_field(sp, ic.seed, ic.amplitude);
            break;
        case K::bubbles: {
            if (d_ != 2)
                throw std::invalid_argument("initial state: bubbles needs a 2D mesh");
            st.phi = l2_project_scalar(sp, [](const Vec& x) {
                auto inside = [&x](double cx, double cy, double r) {
                    return (x - Vec(cx, cy)).squaredNorm() <= r * r;
                };
                bool in = inside(0.25, 0.25, 0.05) || inside(0.25, 0.75, 0.01) ||
                          inside(0.75, 0.25, 0.01) || inside(0.75, 0.75, 0.01);
                return in ? -1.0 : 1.0;
            });
            break;
        }
        case K::rotating_bubble: {
            if (d_ != 2)
                throw std::invalid_argument("initial state: rotating-bubble needs a 2D mesh");
            st.phi = l2_project_scalar(sp, [](const Vec& x) {
                return (x + Vec(0.1, 0.1)).squaredNorm() <= 0.01 ? -1.0 : 1.0;
            });
            break;
        }
        case K::rayleigh_taylor: {
            if (d_ != 2)
                throw std::invalid_argument("initial state: rayleigh-taylor needs a 2D mesh");
            st.phi = l2_project_scalar(sp, [](const Vec& x) { return x[1] <= 0.0 ? 1.0 : -1.0; });
            st.v = l2_project(sp, 2, [](const Vec& x, double* out) {
                out[0] = 0.0;
                out[1] = 0.25 * (1.0 + std::cos(M_PI * x[0])) * (1.0 + std::cos(M_PI * x[1] / 2.0));
            });
            break;
        }
        }
        // Derived fields, consistent with the stationary limits of the
        // midpoint equations: lambda = 0, q the discrete gradient, a the
        // scaled chemical potential of phi, b the generalized pressure.
        st.q = G_ * st.phi;
        st.a = mp_.c_plus() * (well_derivative_moments(st.phi) + mp_.gamma * (GT_ * st.q));
        st.b = st.lambda + 0.25 * (mp_.rho1 + mp_.rho2) * speed_squared_moments(st.v);
        return st;
    }

    // ---- residual and Jacobian -----------------------------------------------

    // Residual of the coupled step equations as a function of the two
    // endpoint states (the multiplier fields of `s1` are the new endpoint
    // values; midpoints are formed internally).  `mu` is the pinning
    // multiplier when lambda pinning is active.
    Eigen::VectorXd assemble_residual(const State& s0, const State& s1, double k,
                                      double mu = 0.0) const
    {
        check_state(s0);
        check_state(s1);
        if (!(k > 0.0)) throw std::invalid_argument("scheme: time step must be positive");
        const double cp = mp_.c_plus(), cm = mp_.c_minus();

        Eigen::VectorXd phih = 0.5 * (s0.phi + s1.phi);
        Eigen::VectorXd vh = 0.5 * (s0.v + s1.v);
        Eigen::VectorXd lamh = 0.5 * (s0.lambda + s1.lambda);
        Eigen::VectorXd ah = 0.5 * (s0.a + s1.a);
        Eigen::VectorXd bh = 0.5 * (s0.b + s1.b);
        Eigen::VectorXd qh = 0.5 * (s0.q + s1.q);
        Eigen::VectorXd sh = ah - cm * bh;
        Eigen::VectorXd dphi = s1.phi - s0.phi;

        Eigen::VectorXd r1 = dphi / k + (cp * mp_.m_r) * ah - (cp * mp_.m_j) * (A1_ * ah);
        Eigen::VectorXd r2 = -(Avisc_ * vh) + G_ * bh;
        Eigen::VectorXd r3 = -(GT_ * vh) - (cm / cp) * (dphi / k);
        Eigen::VectorXd r4 = ah - cm * lamh - (cp * mp_.gamma) * (GT_ * qh);
        Eigen::VectorXd r5 = bh - lamh;
        Eigen::VectorXd r6 = qh - G_ * phih;
        if (pin_) r3 += mu * mass_vec_;

        add_volume_kernels(s0, s1, phih, vh, sh, k, r1, r2, r3, r4, r5);
        add_facet_kernels(phih, vh, sh, r1, r2, r3);

        Eigen::VectorXd R = Eigen::VectorXd::Zero(packed_size());
        const int B = block();
        for (int e = 0; e < ne_; ++e) {
            for (int i = 0; i < nm_; ++i) {
                R[e * B + off_phi() + i] = r1[e * nm_ + i];
                R[e * B + off_lambda() + i] = r3[e * nm_ + i];
                R[e * B + off_a() + i] = r4[e * nm_ + i];
                R[e * B + off_b() + i] = r5[e * nm_ + i];
            }
            for (int c = 0; c < d_; ++c)
                for (int i = 0; i < nm_; ++i) {
                    R[e * B + off_v() + c * nm_ + i] = r2[(e * d_ + c) * nm_ + i];
                    R[e * B + off_q() + c * nm_ + i] = r6[(e * d_ + c) * nm_ + i];
                }
        }
        if (pin_) R[packed_size() - 1] = mass_vec_.dot(lamh);
        return R;
    }

    // Jacobian of assemble_residual with respect to the packed new endpoint
    // unknowns (and the pinning multiplier).
    SparseMat assemble_jacobian(const State& s0, const State& s1, double k) const
    {
        check_state(s0);
        check_state(s1);
        if (!(k > 0.0)) throw std::invalid_argument("scheme: time step must be positive");
        work_trips_ = constant_triplets(k);
        add_variable_triplets(s0, s1, k, work_trips_);
        SparseMat J(packed_size(), packed_size());
        J.setFromTriplets(work_trips_.begin(), work_trips_.end());
        return J;
    }

    // ---- Newton stepping -----------------------------------------------------

    State newton_solve(const State& s0, double k, const NewtonSettings& ns,
                       StepReport* report = nullptr) const
    {
        const int target = s0.step + 1;
        State s1 = s0;  // predictor: previous endpoint, preserves steady states exactly
        s1.t = s0.t + k;
        s1.step = target;
        double mu = 0.0;

        Eigen::VectorXd r = assemble_residual(s0, s1, k, mu);
        if (!r.allFinite())
            throw NewtonFailure("newton: residual not finite at the predictor", target, 0,
                                std::numeric_limits<double>::quiet_NaN());
        double rn = r.lpNorm<Eigen::Infinity>();
        int iter = 0;

        while (rn > ns.tolerance) {
            if (iter >= ns.max_iterations)
                throw NewtonFailure(msg("newton: no convergence at step ", target, " after ",
                                        iter, " iterations (residual ", rn, ")"),
                                    target, iter, rn);
            SparseMat J = assemble_jacobian(s0, s1, k);
            Eigen::VectorXd delta = solve_linear(J, -r, ns, target, iter, rn);

            // Backtracking line search on the residual max-norm; after the
            // last allowed halving the step is accepted as-is so Newton can
            // escape a shallow local increase.
            Eigen::VectorXd y = pack(s1, mu);
            double alpha = 1.0;
            bool accepted = false;
            for (int bt = 0; bt <= ns.max_backtracks; ++bt) {
                Eigen::VectorXd yt = y + alpha * delta;
                State trial = s1;
                double mu_t = 0.0;
                unpack(yt, trial, &mu_t);
                Eigen::VectorXd rt = assemble_residual(s0, trial, k, mu_t);
                if (rt.allFinite() && (rt.lpNorm<Eigen::Infinity>() < rn || bt == ns.max_backtracks)) {
                    s1 = std::move(trial);
                    mu = mu_t;
                    r = std::move(rt);
                    rn = r.lpNorm<Eigen::Infinity>();
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted)
                throw NewtonFailure(msg("newton: line search failed at step ", target,
                                        " (nonfinite residual)"),
                                    target, iter, rn);
            ++iter;
        }

        // Re-impose the exact discrete-gradient invariant; within solver
        // tolerance already, this keeps q = G phi exact over long runs.
        s1.q = G_ * s1.phi;

        if (report) {
            Eigen::VectorXd ah = 0.5 * (s0.a + s1.a);
            Eigen::VectorXd vh = 0.5 * (s0.v + s1.v);
            report->iterations = iter;
            report->residual_norm = rn;
            report->diss_reactive = mp_.m_r * ah.squaredNorm();
            report->diss_diffusive = -mp_.m_j * ah.dot(A1_ * ah);
            report->diss_viscous = -vh.dot(Avisc_ * vh);
        }
        return s1;
    }

    std::vector<StepReport> advance(
        State& st, const TimeGrid& grid, const NewtonSettings& ns,
        const std::function<void(const State&, const StepReport&)>& hook = {}) const
    {
        if (!(grid.k > 0.0) || grid.steps < 0)
            throw std::invalid_argument("scheme: invalid time grid");
        std::vector<StepReport> reports;
        reports.reserve(static_cast<size_t>(grid.steps));
        for (int n = 0; n < grid.steps; ++n) {
            StepReport rep;
            st = newton_solve(st, grid.k, ns, &rep);
            reports.push_back(rep);
            if (hook) hook(st, rep);
        }
        return reports;
    }

    // ---- pointwise moment helpers ---------------------------------------------

    // Moments of W'(phi(x)) including the convex penalty part.
    Eigen::VectorXd well_derivative_moments(const Eigen::VectorXd& phi) const
    {
        const DgSpace& sp = *sp_;
        Eigen::VectorXd out = Eigen::VectorXd::Zero(sp.scalar_size());
        for (int e = 0; e < ne_; ++e)
            for (int q = 0; q < sp.nvq; ++q) {
                const size_t qq = static_cast<size_t>(e) * sp.nvq + q;
                const double* bv = &sp.vol_val[qq * nm_];
                double ph = 0.0;
                for (int i = 0; i < nm_; ++i) ph += phi[e * nm_ + i] * bv[i];
                const double w = sp.vol_weight[qq] * well_d(ph, mp_.well_A);
                for (int i = 0; i < nm_; ++i) out[e * nm_ + i] += w * bv[i];
            }
        return out;
    }

    // Moments of |v(x)|^2.
    Eigen::VectorXd speed_squared_moments(const Eigen::VectorXd& v) const
    {
        const DgSpace& sp = *sp_;
        Eigen::VectorXd out = Eigen::VectorXd::Zero(sp.scalar_size());
        for (int e = 0; e < ne_; ++e)
            for (int q = 0; q < sp.nvq; ++q) {
                const size_t qq = static_cast<size_t>(e) * sp.nvq + q;
                const double* bv = &sp.vol_val[qq * nm_];
                double s2 = 0.0;
                for (int c = 0; c < d_; ++c) {
                    double vc = 0.0;
                    for (int i = 0; i < nm_; ++i) vc += v[(e * d_ + c) * nm_ + i] * bv[i];
                    s2 += vc * vc;
                }
                const double w = sp.vol_weight[qq] * s2;
                for (int i = 0; i < nm_; ++i) out[e * nm_ + i] += w * bv[i];
            }
        return out;
    }

private:
    // ---- construction helpers -------------------------------------------------

    void tabulate_body_potential()
    {
        const DgSpace& sp = *sp_;
        const Vec g = opts_.gravity;
        const double w2 = opts_.omega * opts_.omega;
        zeta_ = l2_project_scalar(
            sp, [&](const Vec& x) { return g.dot(x) - 0.5 * w2 * x.squaredNorm(); });

        zeta_grad_.assign(static_cast<size_t>(ne_) * sp.nvq, Vec::Zero());
        for (int e = 0; e < ne_; ++e)
            for (int q = 0; q < sp.nvq; ++q) {
                const size_t qq = static_cast<size_t>(e) * sp.nvq + q;
                Vec gr = Vec::Zero();
                for (int i = 0; i < nm_; ++i) gr += zeta_[e * nm_ + i] * sp.vol_grad[qq * nm_ + i];
                zeta_grad_[qq] = gr;
            }
        const int nf = sp.mesh->num_facets();
        for (int s = 0; s < 2; ++s) zeta_facet_[s].assign(static_cast<size_t>(nf) * sp.nfq, 0.0);
        for (int f = 0; f < nf; ++f) {
            const Facet& fc = sp.mesh->facets[f];
            for (int s = 0; s < 2; ++s) {
                if (fc.elem[s] < 0) continue;
                for (int q = 0; q < sp.nfq; ++q) {
                    const size_t qq = static_cast<size_t>(f) * sp.nfq + q;
                    double zv = 0.0;
                    for (int i = 0; i < nm_; ++i)
                        zv += zeta_[fc.elem[s] * nm_ + i] * sp.facet_val[s][qq * nm_ + i];
                    zeta_facet_[s][qq] = zv;
                }
            }
        }
    }

    void check_state(const State& st) const
    {
        if (st.phi.size() != sp_->scalar_size() || st.v.size() != sp_->field_size(d_) ||
            st.lambda.size() != sp_->scalar_size() || st.a.size() != sp_->scalar_size() ||
            st.b.size() != sp_->scalar_size() || st.q.size() != sp_->field_size(d_))
            throw std::invalid_argument("scheme: state does not match the space");
    }

    // ---- residual kernels -------------------------------------------------------

    void add_volume_kernels(const State& s0, const State& s1, const Eigen::VectorXd& phih,
                            const Eigen::VectorXd& vh, const Eigen::VectorXd& sh, double k,
                            Eigen::VectorXd& r1, Eigen::VectorXd& r2, Eigen::VectorXd& r3,
                            Eigen::VectorXd& r4, Eigen::VectorXd& r5) const
    {
        const DgSpace& sp = *sp_;
        const double cp = mp_.c_plus(), cm = mp_.c_minus();
        const double cmcp = cm / cp;
        const double c5 = 0.125 * (mp_.rho1 + mp_.rho2);
        const double om = opts_.omega;

        for (int e = 0; e < ne_; ++e) {
            const double* ph = &phih[e * nm_];
            const double* p0 = &s0.phi[e * nm_];
            const double* p1 = &s1.phi[e * nm_];
            const double* vv = &vh[(e * d_) * nm_];
            const double* v0 = &s0.v[(e * d_) * nm_];
            const double* v1 = &s1.v[(e * d_) * nm_];
            const double* sc = &sh[e * nm_];
            double* R1 = &r1[e * nm_];
            double* R2 = &r2[(e * d_) * nm_];
            double* R3 = &r3[e * nm_];
            double* R4 = &r4[e * nm_];
            double* R5 = &r5[e * nm_];

            for (int q = 0; q < sp.nvq; ++q) {
                const size_t qq = static_cast<size_t>(e) * sp.nvq + q;
                const double w = sp.vol_weight[qq];
                const double* bv = &sp.vol_val[qq * nm_];
                const Vec* bg = &sp.vol_grad[qq * nm_];

                double phiq = 0.0, phi0q = 0.0, phi1q = 0.0;
                Vec gph = Vec::Zero(), gs = Vec::Zero();
                for (int i = 0; i < nm_; ++i) {
                    phiq += ph[i] * bv[i];
                    phi0q += p0[i] * bv[i];
                    phi1q += p1[i] * bv[i];
                    gph += ph[i] * bg[i];
                    gs += sc[i] * bg[i];
                }
                Vec vq = Vec::Zero(), v0q = Vec::Zero(), v1q = Vec::Zero();
                Mat2 Dv = Mat2::Zero();
                for (int c = 0; c < d_; ++c)
                    for (int i = 0; i < nm_; ++i) {
                        const double cv = vv[c * nm_ + i];
                        vq[c] += cv * bv[i];
                        Dv(c, 0) += cv * bg[i][0];
                        Dv(c, 1) += cv * bg[i][1];
                        v0q[c] += v0[c * nm_ + i] * bv[i];
                        v1q[c] += v1[c * nm_ + i] * bv[i];
                    }
                const double divv = Dv.trace();
                const double rhoq = mp_.density(phiq);
                const double tker = gph.dot(vq) + phiq * divv;

                // rho [ dv/k + (v.grad)v - grad|v|^2/2 ] + (phi/c+) grad s
                Vec P = rhoq * ((v1q - v0q) / k + Dv * vq - Dv.transpose() * vq);
                P += (phiq / cp) * gs;
                if (has_body_) P += rhoq * zeta_grad_[qq];
                if (om != 0.0) P += (2.0 * rhoq * om) * Vec(-vq[1], vq[0]);

                const double dq = well_dq(phi0q, phi1q, mp_.well_A);
                const double s5 = v0q.squaredNorm() + v1q.squaredNorm();

                for (int i = 0; i < nm_; ++i) {
                    const double wi = w * bv[i];
                    R1[i] += wi * tker;
                    R3[i] -= cmcp * wi * tker;
                    R4[i] -= cp * wi * dq;
                    R5[i] -= c5 * wi * s5;
                    for (int c = 0; c < d_; ++c) R2[c * nm_ + i] += wi * P[c];
                }
            }
        }
    }

    void add_facet_kernels(const Eigen::VectorXd& phih, const Eigen::VectorXd& vh,
                           const Eigen::VectorXd& sh, Eigen::VectorXd& r1, Eigen::VectorXd& r2,
                           Eigen::VectorXd& r3) const
    {
        const DgSpace& sp = *sp_;
        const Mesh& m = *sp.mesh;
        const double cp = mp_.c_plus(), cm = mp_.c_minus();
        const double cmcp = cm / cp;

        for (int f = 0; f < m.num_facets(); ++f) {
            const Facet& fc = m.facets[f];
            const bool bnd = fc.boundary();
            const Vec& n = fc.normal;
            const double avgfac = bnd ? 1.0 : 0.5;
            const int nsides = bnd ? 1 : 2;

            for (int q = 0; q < sp.nfq; ++q) {
                const size_t qq = static_cast<size_t>(f) * sp.nfq + q;
                const double w = sp.facet_weight[qq];

                double phit[2] = {0.0, 0.0}, st_[2] = {0.0, 0.0};
                Vec vt[2] = {Vec::Zero(), Vec::Zero()};
                for (int s = 0; s < nsides; ++s) {
                    const int e = fc.elem[s];
                    const double* bv = &sp.facet_val[s][qq * nm_];
                    for (int i = 0; i < nm_; ++i) {
                        phit[s] += phih[e * nm_ + i] * bv[i];
                        st_[s] += sh[e * nm_ + i] * bv[i];
                    }
                    for (int c = 0; c < d_; ++c)
                        for (int i = 0; i < nm_; ++i) vt[s][c] += vh[(e * d_ + c) * nm_ + i] * bv[i];
                }

                // transport flux  -jump{phi v}.n avg{test}, boundary included
                const double jpv =
                    phit[0] * vt[0].dot(n) - (bnd ? 0.0 : phit[1] * vt[1].dot(n));
                for (int st = 0; st < nsides; ++st) {
                    const int e = fc.elem[st];
                    const double* bv = &sp.facet_val[st][qq * nm_];
                    for (int i = 0; i < nm_; ++i) {
                        const double t = -w * jpv * avgfac * bv[i];
                        r1[e * nm_ + i] += t;
                        r3[e * nm_ + i] -= cmcp * t;
                    }
                }

                // momentum facet corrections, interior facets only
                if (bnd) continue;
                const double rhot[2] = {mp_.density(phit[0]), mp_.density(phit[1])};
                const Vec arv = 0.5 * (rhot[0] * vt[0] + rhot[1] * vt[1]);
                const Vec jv = vt[0] - vt[1];
                const double js = st_[0] - st_[1];
                const double jv2 = vt[0].squaredNorm() - vt[1].squaredNorm();
                const double jz = has_body_ ? zeta_facet_[0][qq] - zeta_facet_[1][qq] : 0.0;
                const double narv = n.dot(arv);

                for (int st = 0; st < 2; ++st) {
                    const int e = fc.elem[st];
                    const double* bv = &sp.facet_val[st][qq * nm_];
                    Vec coefc = (-0.5 * narv) * jv;                    // -(n.avg{rho v}) jump{v} avg{X}
                    coefc += (0.25 * jv2 * rhot[st]) * n;              // +jump{|v|^2}/2 avg{rho X}.n
                    coefc -= (0.5 / cp * js * phit[st]) * n;           // -jump{s}/c+ avg{phi X}.n
                    coefc -= (0.5 * jz * rhot[st]) * n;                // -jump{zeta} avg{rho X}.n
                    for (int c = 0; c < d_; ++c)
                        for (int i = 0; i < nm_; ++i)
                            r2[(e * d_ + c) * nm_ + i] += w * coefc[c] * bv[i];
                }
            }
        }
    }

    // ---- Jacobian assembly --------------------------------------------------------

    // Remap a matrix acting on field layouts into packed triplets.
    void emit_matrix(const SparseMat& M, int row_off, bool row_vec, int col_off, bool col_vec,
                     double factor, std::vector<Triplet>& out) const
    {
        const int B = block();
        const int rsz = row_vec ? d_ * nm_ : nm_;
        const int csz = col_vec ? d_ * nm_ : nm_;
        for (int k = 0; k < M.outerSize(); ++k)
            for (SparseMat::InnerIterator it(M, k); it; ++it) {
                const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
                out.emplace_back((r / rsz) * B + row_off + r % rsz,
                                 (c / csz) * B + col_off + c % csz, factor * it.value());
            }
    }

    const std::vector<Triplet>& constant_triplets(double k) const
    {
        if (k == const_k_ && !const_trips_.empty()) return const_trips_;
        const_k_ = k;
        const_trips_.clear();
        const double cp = mp_.c_plus(), cm = mp_.c_minus();
        const int B = block();
        auto& out = const_trips_;

        for (int e = 0; e < ne_; ++e) {
            for (int i = 0; i < nm_; ++i) {
                out.emplace_back(e * B + off_phi() + i, e * B + off_phi() + i, 1.0 / k);
                out.emplace_back(e * B + off_phi() + i, e * B + off_a() + i, 0.5 * cp * mp_.m_r);
                out.emplace_back(e * B + off_lambda() + i, e * B + off_phi() + i, -(cm / cp) / k);
                out.emplace_back(e * B + off_a() + i, e * B + off_a() + i, 0.5);
                out.emplace_back(e * B + off_a() + i, e * B + off_lambda() + i, -0.5 * cm);
                out.emplace_back(e * B + off_b() + i, e * B + off_b() + i, 0.5);
                out.emplace_back(e * B + off_b() + i, e * B + off_lambda() + i, -0.5);
            }
            for (int c = 0; c < d_; ++c)
                for (int i = 0; i < nm_; ++i)
                    out.emplace_back(e * B + off_q() + c * nm_ + i, e * B + off_q() + c * nm_ + i,
                                     0.5);
        }
        emit_matrix(A1_, off_phi(), false, off_a(), false, -0.5 * cp * mp_.m_j, out);
        emit_matrix(Avisc_, off_v(), true, off_v(), true, -0.5, out);
        emit_matrix(G_, off_v(), true, off_b(), false, 0.5, out);
        emit_matrix(GT_, off_lambda(), false, off_v(), true, -0.5, out);
        emit_matrix(GT_, off_a(), false, off_q(), true, -0.5 * cp * mp_.gamma, out);
        emit_matrix(G_, off_q(), true, off_phi(), false, -0.5, out);
        if (pin_) {
            const int last = packed_size() - 1;
            for (int e = 0; e < ne_; ++e)
                for (int i = 0; i < nm_; ++i) {
                    out.emplace_back(e * B + off_lambda() + i, last, mass_vec_[e * nm_ + i]);
                    out.emplace_back(last, e * B + off_lambda() + i, 0.5 * mass_vec_[e * nm_ + i]);
                }
        }
        return const_trips_;
    }

    void add_variable_triplets(const State& s0, const State& s1, double k,
                               std::vector<Triplet>& out) const
    {
        const DgSpace& sp = *sp_;
        const Mesh& m = *sp.mesh;
        const double cp = mp_.c_plus(), cm = mp_.c_minus();
        const double cmcp = cm / cp;
        const double rs = mp_.density_slope();
        const double c5 = 0.125 * (mp_.rho1 + mp_.rho2);
        const double om = opts_.omega;
        const int B = block();
        const int vn = d_ * nm_;

        Eigen::VectorXd phih = 0.5 * (s0.phi + s1.phi);
        Eigen::VectorXd vh = 0.5 * (s0.v + s1.v);
        Eigen::VectorXd sh = 0.5 * ((s0.a + s1.a) - cm * (s0.b + s1.b));

        // --- volume blocks ---
        Eigen::MatrixXd Tphi(nm_, nm_), Tv(nm_, vn), K2phi(vn, nm_), K2v(vn, vn), Kcp(vn, nm_),
            W4(nm_, nm_), K5(nm_, vn);
        for (int e = 0; e < ne_; ++e) {
            Tphi.setZero();
            Tv.setZero();
            K2phi.setZero();
            K2v.setZero();
            Kcp.setZero();
            W4.setZero();
            K5.setZero();
            const double* ph = &phih[e * nm_];
            const double* p0 = &s0.phi[e * nm_];
            const double* p1 = &s1.phi[e * nm_];
            const double* vv = &vh[(e * d_) * nm_];
            const double* v0 = &s0.v[(e * d_) * nm_];
            const double* v1 = &s1.v[(e * d_) * nm_];
            const double* sc = &sh[e * nm_];

            for (int q = 0; q < sp.nvq; ++q) {
                const size_t qq = static_cast<size_t>(e) * sp.nvq + q;
                const double w = sp.vol_weight[qq];
                const double* bv = &sp.vol_val[qq * nm_];
                const Vec* bg = &sp.vol_grad[qq * nm_];

                double phiq = 0.0, phi0q = 0.0, phi1q = 0.0;
                Vec gph = Vec::Zero(), gs = Vec::Zero();
                for (int i = 0; i < nm_; ++i) {
                    phiq += ph[i] * bv[i];
                    phi0q += p0[i] * bv[i];
                    phi1q += p1[i] * bv[i];
                    gph += ph[i] * bg[i];
                    gs += sc[i] * bg[i];
                }
                Vec vq = Vec::Zero(), v0q = Vec::Zero(), v1q = Vec::Zero();
                Mat2 Dv = Mat2::Zero();
                for (int c = 0; c < d_; ++c)
                    for (int i = 0; i < nm_; ++i) {
                        const double cv = vv[c * nm_ + i];
                        vq[c] += cv * bv[i];
                        Dv(c, 0) += cv * bg[i][0];
                        Dv(c, 1) += cv * bg[i][1];
                        v0q[c] += v0[c * nm_ + i] * bv[i];
                        v1q[c] += v1[c * nm_ + i] * bv[i];
                    }
                const double divv = Dv.trace();
                const double rhoq = mp_.density(phiq);
                const Vec conv = Dv * vq - Dv.transpose() * vq;
                const Vec dvk = (v1q - v0q) / k;
                Vec zg = has_body_ ? zeta_grad_[qq] : Vec(Vec::Zero());
                Vec cor = om != 0.0 ? Vec(-2.0 * om * vq[1], 2.0 * om * vq[0]) : Vec(Vec::Zero());
                const double dqw = well_dq_dw(phi0q, phi1q, mp_.well_A);

                for (int j = 0; j < nm_; ++j) {
                    const double bj = bv[j];
                    const Vec& gj = bg[j];
                    const double tphi_j = 0.5 * (gj.dot(vq) + bj * divv);
                    for (int i = 0; i < nm_; ++i) {
                        const double wi = w * bv[i];
                        Tphi(i, j) += wi * tphi_j;
                        W4(i, j) -= cp * w * dqw * bj * bv[i];
                    }
                    // momentum, phi column
                    Vec dP = 0.5 * bj * (rs * (dvk + conv + zg + cor) + (1.0 / cp) * gs);
                    for (int ci = 0; ci < d_; ++ci)
                        for (int i = 0; i < nm_; ++i) K2phi(ci * nm_ + i, j) += w * bv[i] * dP[ci];
                    // coupling, a column (the b column is -c- times it)
                    for (int ci = 0; ci < d_; ++ci)
                        for (int i = 0; i < nm_; ++i)
                            Kcp(ci * nm_ + i, j) += w * bv[i] * (phiq / cp) * 0.5 * gj[ci];

                    for (int cj = 0; cj < d_; ++cj) {
                        const int colj = cj * nm_ + j;
                        const double tv_j = 0.5 * (gph[cj] * bj + phiq * gj[cj]);
                        for (int i = 0; i < nm_; ++i) {
                            Tv(i, colj) += w * bv[i] * tv_j;
                            K5(i, colj) -= 2.0 * c5 * w * v1q[cj] * bj * bv[i];
                        }
                        // momentum, velocity column
                        for (int ci = 0; ci < d_; ++ci) {
                            double val = ci == cj ? rhoq * bj / k : 0.0;
                            val += 0.5 * rhoq *
                                   (bj * Dv(ci, cj) + (ci == cj ? vq.dot(gj) : 0.0) -
                                    bj * Dv(cj, ci) - vq[cj] * gj[ci]);
                            if (om != 0.0)
                                val += rhoq * om * (ci == 0 ? (cj == 1 ? -bj : 0.0)
                                                            : (cj == 0 ? bj : 0.0));
                            for (int i = 0; i < nm_; ++i)
                                K2v(ci * nm_ + i, colj) += w * bv[i] * val;
                        }
                    }
                }
            }

            auto emit_block = [&](const Eigen::MatrixXd& Mb, int roff, int coff, double fac) {
                for (int j = 0; j < Mb.cols(); ++j)
                    for (int i = 0; i < Mb.rows(); ++i)
                        out.emplace_back(e * B + roff + i, e * B + coff + j, fac * Mb(i, j));
            };
            emit_block(Tphi, off_phi(), off_phi(), 1.0);
            emit_block(Tv, off_phi(), off_v(), 1.0);
            emit_block(Tphi, off_lambda(), off_phi(), -cmcp);
            emit_block(Tv, off_lambda(), off_v(), -cmcp);
            emit_block(K2phi, off_v(), off_phi(), 1.0);
            emit_block(K2v, off_v(), off_v(), 1.0);
            emit_block(Kcp, off_v(), off_a(), 1.0);
            emit_block(Kcp, off_v(), off_b(), -cm);
            emit_block(W4, off_a(), off_phi(), 1.0);
            emit_block(K5, off_b(), off_v(), 1.0);
        }

        // --- facet blocks ---
        std::array<std::array<Eigen::MatrixXd, 2>, 2> TFphi, TFv, F2phi, F2v, F2a;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                TFphi[a][b].resize(nm_, nm_);
                TFv[a][b].resize(nm_, vn);
                F2phi[a][b].resize(vn, nm_);
                F2v[a][b].resize(vn, vn);
                F2a[a][b].resize(vn, nm_);
            }

        for (int f = 0; f < m.num_facets(); ++f) {
            const Facet& fc = m.facets[f];
            const bool bnd = fc.boundary();
            const Vec& n = fc.normal;
            const double avgfac = bnd ? 1.0 : 0.5;
            const int nsides = bnd ? 1 : 2;
            for (int a = 0; a < nsides; ++a)
                for (int b = 0; b < nsides; ++b) {
                    TFphi[a][b].setZero();
                    TFv[a][b].setZero();
                    F2phi[a][b].setZero();
                    F2v[a][b].setZero();
                    F2a[a][b].setZero();
                }

            for (int q = 0; q < sp.nfq; ++q) {
                const size_t qq = static_cast<size_t>(f) * sp.nfq + q;
                const double w = sp.facet_weight[qq];
                const double* bvs[2] = {&sp.facet_val[0][qq * nm_], &sp.facet_val[1][qq * nm_]};

                double phit[2] = {0.0, 0.0}, st_[2] = {0.0, 0.0};
                Vec vt[2] = {Vec::Zero(), Vec::Zero()};
                for (int s = 0; s < nsides; ++s) {
                    const int e = fc.elem[s];
                    for (int i = 0; i < nm_; ++i) {
                        phit[s] += phih[e * nm_ + i] * bvs[s][i];
                        st_[s] += sh[e * nm_ + i] * bvs[s][i];
                    }
                    for (int c = 0; c < d_; ++c)
                        for (int i = 0; i < nm_; ++i)
                            vt[s][c] += vh[(e * d_ + c) * nm_ + i] * bvs[s][i];
                }

                // transport flux derivatives (all facets)
                for (int st = 0; st < nsides; ++st)
                    for (int su = 0; su < nsides; ++su) {
                        const double sgn = su == 0 ? 1.0 : -1.0;
                        const double vn_su = vt[su].dot(n);
                        for (int j = 0; j < nm_; ++j) {
                            const double dphi_j = -w * sgn * 0.5 * bvs[su][j] * vn_su * avgfac;
                            for (int i = 0; i < nm_; ++i)
                                TFphi[st][su](i, j) += dphi_j * bvs[st][i];
                            for (int cj = 0; cj < d_; ++cj) {
                                const double dv_j =
                                    -w * sgn * phit[su] * 0.5 * bvs[su][j] * n[cj] * avgfac;
                                for (int i = 0; i < nm_; ++i)
                                    TFv[st][su](i, cj * nm_ + j) += dv_j * bvs[st][i];
                            }
                        }
                    }

                if (bnd) continue;
                const double rhot[2] = {mp_.density(phit[0]), mp_.density(phit[1])};
                const Vec arv = 0.5 * (rhot[0] * vt[0] + rhot[1] * vt[1]);
                const Vec jv = vt[0] - vt[1];
                const double js = st_[0] - st_[1];
                const double jv2 = vt[0].squaredNorm() - vt[1].squaredNorm();
                const double jz = has_body_ ? zeta_facet_[0][qq] - zeta_facet_[1][qq] : 0.0;
                const double narv = n.dot(arv);

                for (int st = 0; st < 2; ++st) {
                    for (int su = 0; su < 2; ++su) {
                        const double sgn = su == 0 ? 1.0 : -1.0;
                        for (int j = 0; j < nm_; ++j) {
                            const double bj = bvs[su][j];
                            // phi columns
                            Vec dphi = (-0.125 * rs * bj * vt[su].dot(n)) * jv;  // via avg{rho v}
                            if (su == st) {
                                const double drho = 0.5 * rs * bj;  // d rho^st / d phi1
                                dphi += (0.25 * jv2 * drho) * n;
                                dphi -= (0.25 / cp * js * bj) * n;  // via avg{phi X}
                                dphi -= (0.5 * jz * drho) * n;
                            }
                            // a columns (b columns are -c- times)
                            const Vec da = (-0.25 / cp * sgn * bj * phit[st]) * n;
                            for (int ci = 0; ci < d_; ++ci)
                                for (int i = 0; i < nm_; ++i) {
                                    F2phi[st][su](ci * nm_ + i, j) += w * dphi[ci] * bvs[st][i];
                                    F2a[st][su](ci * nm_ + i, j) += w * da[ci] * bvs[st][i];
                                }
                            // velocity columns
                            for (int cj = 0; cj < d_; ++cj) {
                                Vec dv = (-0.125 * rhot[su] * bj * n[cj]) * jv;  // via avg{rho v}
                                dv += (0.25 * sgn * vt[su][cj] * bj * rhot[st]) * n;  // via jump{|v|^2}
                                Vec e_cj = Vec::Zero();
                                e_cj[cj] = 1.0;
                                dv += (-0.25 * narv * sgn * bj) * e_cj;  // via jump{v}
                                for (int ci = 0; ci < d_; ++ci)
                                    for (int i = 0; i < nm_; ++i)
                                        F2v[st][su](ci * nm_ + i, cj * nm_ + j) +=
                                            w * dv[ci] * bvs[st][i];
                            }
                        }
                    }
                }
            }

            for (int st = 0; st < nsides; ++st)
                for (int su = 0; su < nsides; ++su) {
                    const int er = fc.elem[st], ec = fc.elem[su];
                    auto emit_block = [&](const Eigen::MatrixXd& Mb, int roff, int coff,
                                          double fac) {
                        for (int j = 0; j < Mb.cols(); ++j)
                            for (int i = 0; i < Mb.rows(); ++i)
                                out.emplace_back(er * B + roff + i, ec * B + coff + j,
                                                 fac * Mb(i, j));
                    };
                    emit_block(TFphi[st][su], off_phi(), off_phi(), 1.0);
                    emit_block(TFv[st][su], off_phi(), off_v(), 1.0);
                    emit_block(TFphi[st][su], off_lambda(), off_phi(), -cmcp);
                    emit_block(TFv[st][su], off_lambda(), off_v(), -cmcp);
                    if (!bnd) {
                        emit_block(F2phi[st][su], off_v(), off_phi(), 1.0);
                        emit_block(F2v[st][su], off_v(), off_v(), 1.0);
                        emit_block(F2a[st][su], off_v(), off_a(), 1.0);
                        emit_block(F2a[st][su], off_v(), off_b(), -cm);
                    }
                }
        }
    }

    Eigen::VectorXd solve_linear(const SparseMat& J, const Eigen::VectorXd& rhs,
                                 const NewtonSettings& ns, int step, int iter, double rn) const
    {
        using Solver = NewtonSettings::Solver;
        Solver sol = ns.solver;
        if (sol == Solver::automatic) {
#ifdef QINSK_HAVE_UMFPACK
            sol = Solver::umfpack;
#else
            sol = Solver::sparse_lu;
#endif
        }
        if (sol == Solver::umfpack) {
#ifdef QINSK_HAVE_UMFPACK
            if (!umf_) umf_ = std::make_unique<Umf>();
            if (!umf_analyzed_) {
                umf_->analyzePattern(J);
                umf_analyzed_ = true;
            }
            umf_->factorize(J);
            if (umf_->info() != Eigen::Success)
                throw NewtonFailure(msg("newton: LU factorization failed at step ", step), step,
                                    iter, rn);
            return umf_->solve(rhs);
#else
            throw std::invalid_argument("newton: this build has no UMFPACK support");
#endif
        }
        if (sol == Solver::sparse_lu) {
            if (!lu_) lu_ = std::make_unique<Lu>();
            if (!lu_analyzed_) {
                lu_->analyzePattern(J);
                lu_analyzed_ = true;
            }
            lu_->factorize(J);
            if (lu_->info() != Eigen::Success)
                throw NewtonFailure(msg("newton: sparse LU factorization failed at step ", step),
                                    step, iter, rn);
            return lu_->solve(rhs);
        }
        Eigen::BiCGSTAB<SparseMat, Eigen::IncompleteLUT<double>> it;
        it.setTolerance(ns.linear_tolerance);
        it.preconditioner().setDroptol(1e-7);
        it.preconditioner().setFillfactor(60);
        it.compute(J);
        Eigen::VectorXd x = it.solve(rhs);
        if (it.info() != Eigen::Success)
            throw NewtonFailure(msg("newton: iterative linear solve failed at step ", step), step,
                                iter, rn);
        return x;
    }

    const DgSpace* sp_;
    ModelParams mp_;
    SchemeOptions opts_;
    int d_ = 1, nm_ = 0, ne_ = 0;
    bool pin_ = false;
    bool has_body_ = false;

    SparseMat A1_, Avisc_, G_, GT_;
    Eigen::VectorXd mass_vec_;
    Eigen::VectorXd zeta_;                       // projected body potential
    std::vector<Vec> zeta_grad_;                 // its gradient at volume points
    std::array<std::vector<double>, 2> zeta_facet_;  // its traces at facet points

    using Lu = Eigen::SparseLU<SparseMat, Eigen::COLAMDOrdering<int>>;
    mutable std::unique_ptr<Lu> lu_;
    mutable bool lu_analyzed_ = false;
#ifdef QINSK_HAVE_UMFPACK
    using Umf = Eigen::UmfPackLU<SparseMat>;
    mutable std::unique_ptr<Umf> umf_;
    mutable bool umf_analyzed_ = false;
#endif
    mutable double const_k_ = -1.0;
    mutable std::vector<Triplet> const_trips_;
    mutable std::vector<Triplet> work_trips_;
};

} // namespace qinsk
