// ============================================================================
// Fully discrete scheme: Jacobian consistency, structural invariants of the
// initial data, exact conservation properties of time steps, the pinned
// variant for equal densities, and the body force helper.
// ============================================================================
#include "qinsk/diagnostics.hpp"
#include "qinsk/scheme.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace qinsk;
using Catch::Approx;

namespace {

// Max-norm relative defect between the assembled Jacobian and a central
// finite difference of the residual.
double jacobian_fd_defect(const Scheme& sch, const State& s0, const State& s1, double k,
                          double mu = 0.0)
{
    const double eps = 1e-6;
    Eigen::VectorXd y = sch.pack(s1, mu);
    SparseMat J = sch.assemble_jacobian(s0, s1, k);
    Eigen::MatrixXd Jd(J), Jfd(J.rows(), J.cols());
    for (int j = 0; j < y.size(); ++j) {
        Eigen::VectorXd yp = y, ym = y;
        yp[j] += eps;
        ym[j] -= eps;
        State sp = s1, sm = s1;
        double mup = 0.0, mum = 0.0;
        sch.unpack(yp, sp, &mup);
        sch.unpack(ym, sm, &mum);
        Jfd.col(j) =
            (sch.assemble_residual(s0, sp, k, mup) - sch.assemble_residual(s0, sm, k, mum)) /
            (2.0 * eps);
    }
    return (Jd - Jfd).lpNorm<Eigen::Infinity>() / Jd.lpNorm<Eigen::Infinity>();
}

State perturbed_copy(const Scheme& sch, const State& s0, std::uint64_t seed, double size)
{
    State s1 = s0;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, size);
    Eigen::VectorXd y = sch.pack(s1);
    for (int i = 0; i < y.size(); ++i) y[i] += gauss(rng);
    sch.unpack(y, s1);
    s1.t = s0.t + 0.01;
    s1.step = s0.step + 1;
    return s1;
}

} // namespace

TEST_CASE("jacobian matches finite differences, 1D default model")
{
    Mesh m = build_interval_mesh(-1.0, 1.0, 4);
    DgSpace sp(m, 1);
    Scheme sch(sp, ModelParams{});
    State s0 = sch.initial_state({InitialCondition::Kind::random, 2, 0.05});
    State s1 = perturbed_copy(sch, s0, 3, 0.01);
    CHECK(jacobian_fd_defect(sch, s0, s1, 0.01) < 1e-5);
}

TEST_CASE("jacobian matches finite differences, pinned equal-density model")
{
    Mesh m = build_interval_mesh(-1.0, 1.0, 4);
    DgSpace sp(m, 2);
    ModelParams mp;
    mp.rho1 = mp.rho2 = 1.0;  // c- = 0: lambda decouples and gets pinned
    Scheme sch(sp, mp);
    REQUIRE(sch.pinned());
    State s0 = sch.initial_state({InitialCondition::Kind::random, 4, 0.05});
    State s1 = perturbed_copy(sch, s0, 5, 0.01);
    CHECK(jacobian_fd_defect(sch, s0, s1, 0.01, 0.37) < 1e-5);
}

TEST_CASE("jacobian matches finite differences, 2D with every option on")
{
    Mesh m = build_rectangle_mesh(0.0, 1.0, 0.0, 1.0, 2, 2);
    DgSpace sp(m, 1);
    ModelParams mp;
    mp.eta1 = 0.001;
    mp.eta2 = 0.005;
    SchemeOptions opts;
    opts.full_ns_tensor = true;
    opts.omega = 0.7;
    opts.gravity = Vec(0.0, 0.01);
    Scheme sch(sp, mp, opts);
    State s0 = sch.initial_state({InitialCondition::Kind::random, 6, 0.05});
    State s1 = perturbed_copy(sch, s0, 7, 0.01);
    CHECK(jacobian_fd_defect(sch, s0, s1, 0.01) < 1e-5);
}

TEST_CASE("initial data satisfies the discrete compatibility relations")
{
    Mesh m = build_rectangle_mesh(-1.0, 1.0, -2.0, 2.0, 2, 4);
    DgSpace sp(m, 1);
    ModelParams mp;
    Scheme sch(sp, mp);
    State st = sch.initial_state({InitialCondition::Kind::rayleigh_taylor, 1, 0.01});

    // multiplier starts at zero, gradient variable is the discrete gradient
    CHECK(st.lambda.lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((st.q - sch.gradient_matrix() * st.phi).lpNorm<Eigen::Infinity>() < 1e-14);

    // b - lambda carries the kinetic closure at equal endpoint velocities
    Eigen::VectorXd expected_b =
        st.lambda + 0.25 * (mp.rho1 + mp.rho2) * sch.speed_squared_moments(st.v);
    CHECK((st.b - expected_b).lpNorm<Eigen::Infinity>() < 1e-13);

    // the chemical-potential-like variable matches its defining relation
    Eigen::VectorXd expected_a =
        mp.c_minus() * st.lambda +
        mp.c_plus() * (sch.well_derivative_moments(st.phi) +
                       mp.gamma * sch.gradient_matrix().transpose() * st.q);
    CHECK((st.a - expected_a).lpNorm<Eigen::Infinity>() < 1e-13);

    // heavy fluid below, light fluid above
    double phi_low, phi_high;
    eval_field(sp, 1, st.phi, 0, Vec(0.25, 0.25), &phi_low);
    CHECK(std::abs(phi_low) == Approx(1.0).margin(1e-10));
}

TEST_CASE("a pure phase is a fixed point and remains one over many steps")
{
    Mesh m = build_interval_mesh(0.0, 1.0, 8);
    DgSpace sp(m, 1);
    Scheme sch(sp, ModelParams{});
    State st = sch.empty_state();
    st.phi = l2_project_scalar(sp, [](const Vec&) { return -1.0; });
    st.q = sch.gradient_matrix() * st.phi;
    Eigen::VectorXd phi0 = st.phi;

    for (int n = 0; n < 10; ++n) {
        StepReport rep;
        st = sch.newton_solve(st, 0.05, NewtonSettings{}, &rep);
        CHECK(rep.iterations == 0);
    }
    CHECK((st.phi - phi0).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK(st.v.lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("time steps conserve mass and satisfy the energy identity exactly")
{
    Mesh m = build_interval_mesh(-1.0, 1.0, 16);
    DgSpace sp(m, 1);
    ModelParams mp;
    Scheme sch(sp, mp);
    State st = sch.initial_state({InitialCondition::Kind::random, 11, 0.01});
    const double mass0 = total_mass(sch, st);
    const double e0 = discrete_energy(sch, st);

    for (int n = 0; n < 8; ++n) {
        State next = sch.newton_solve(st, 0.01, NewtonSettings{});
        CHECK(std::abs(step_energy_deviation(sch, st, next, 0.01)) < 1e-12 * std::abs(e0));
        CHECK(std::abs(total_mass(sch, next) - mass0) < 1e-12 * std::abs(mass0));
        CHECK(discrete_energy(sch, next) <= discrete_energy(sch, st) + 1e-12);
        // the gradient variable is re-imposed exactly after each solve
        CHECK((next.q - sch.gradient_matrix() * next.phi).lpNorm<Eigen::Infinity>() == 0.0);
        st = std::move(next);
    }
}

TEST_CASE("energy identity holds with body forces and the full tensor in 2D")
{
    Mesh m = build_rectangle_mesh(0.0, 1.0, 0.0, 1.0, 2, 2);
    DgSpace sp(m, 1);
    ModelParams mp;
    mp.eta1 = 0.001;
    mp.eta2 = 0.005;
    SchemeOptions opts;
    opts.full_ns_tensor = true;
    opts.omega = 1.3;
    opts.gravity = Vec(0.0, 0.01);
    Scheme sch(sp, mp, opts);
    State st = sch.initial_state({InitialCondition::Kind::random, 13, 0.02});
    const double mass0 = total_mass(sch, st);

    for (int n = 0; n < 4; ++n) {
        State next = sch.newton_solve(st, 0.01, NewtonSettings{});
        CHECK(std::abs(step_energy_deviation(sch, st, next, 0.01)) < 1e-11);
        CHECK(std::abs(total_mass(sch, next) - mass0) < 1e-12 * std::abs(mass0));
        st = std::move(next);
    }
}

TEST_CASE("equal densities pin the multiplier mean to zero")
{
    Mesh m = build_interval_mesh(-1.0, 1.0, 16);
    DgSpace sp(m, 1);
    ModelParams mp;
    mp.rho1 = mp.rho2 = 1.0;
    Scheme sch(sp, mp);
    REQUIRE(sch.pinned());

    State st = sch.initial_state({InitialCondition::Kind::random, 17, 0.01});
    for (int n = 0; n < 3; ++n) {
        st = sch.newton_solve(st, 0.01, NewtonSettings{});
        // integral of lambda over the domain: mode-0 coefficients weighted by
        // sqrt of the element measures
        double integral = 0.0;
        for (int e = 0; e < m.num_elements(); ++e)
            integral += st.lambda[e * sp.nmodes] * std::sqrt(m.geom[e].volume);
        CHECK(std::abs(integral) < 1e-9);
    }
}

TEST_CASE("advance drives the hook and the step counters")
{
    Mesh m = build_interval_mesh(-1.0, 1.0, 8);
    DgSpace sp(m, 1);
    Scheme sch(sp, ModelParams{});
    State st = sch.initial_state({InitialCondition::Kind::random, 19, 0.005});
    int calls = 0;
    auto reports = sch.advance(st, TimeGrid{0.01, 5}, NewtonSettings{},
                               [&](const State& s, const StepReport&) {
                                   ++calls;
                                   CHECK(s.step == calls);
                               });
    CHECK(calls == 5);
    CHECK(reports.size() == 5);
    CHECK(st.step == 5);
    CHECK(st.t == Approx(0.05));
}

TEST_CASE("newton reports nonconvergence with the failing step index")
{
    Mesh m = build_interval_mesh(-1.0, 1.0, 8);
    DgSpace sp(m, 1);
    Scheme sch(sp, ModelParams{});
    State st = sch.initial_state({InitialCondition::Kind::random, 23, 0.01});
    NewtonSettings ns;
    ns.tolerance = 1e-300;  // unattainable
    ns.max_iterations = 2;
    try {
        sch.newton_solve(st, 0.01, ns);
        FAIL("expected NewtonFailure");
    } catch (const NewtonFailure& err) {
        CHECK(err.step == 1);
        CHECK(err.iterations == 2);
        CHECK(err.residual > 0.0);
    }
}

TEST_CASE("body force contributions")
{
    SchemeOptions opts;
    opts.omega = 1.0;

    // centrifugal push at x = (1,0) with no velocity and no gravity
    Vec f = body_force_contribution(opts, 2, Vec(1.0, 0.0), 1.0, Vec::Zero());
    CHECK(f[0] == Approx(1.0));
    CHECK(f[1] == Approx(0.0).margin(1e-15));

    // Coriolis deflection of a unit velocity at the origin
    f = body_force_contribution(opts, 2, Vec::Zero(), 1.0, Vec(1.0, 0.0));
    CHECK(f[0] == Approx(0.0).margin(1e-15));
    CHECK(f[1] == Approx(-2.0));

    // gravity enters with density scaling and the documented sign
    SchemeOptions grav;
    grav.gravity = Vec(0.0, 0.01);
    f = body_force_contribution(grav, 2, Vec::Zero(), 2.0, Vec::Zero());
    CHECK(f[1] == Approx(-0.02));

    // rotation demands two dimensions
    CHECK_THROWS_AS(body_force_contribution(opts, 1, Vec::Zero(), 1.0, Vec::Zero()),
                    std::invalid_argument);
}

TEST_CASE("scheme construction rejects inconsistent options")
{
    Mesh m1 = build_interval_mesh(0.0, 1.0, 4);
    DgSpace sp1(m1, 1);
    SchemeOptions rot;
    rot.omega = 1.0;
    CHECK_THROWS_AS(Scheme(sp1, ModelParams{}, rot), std::invalid_argument);

    SchemeOptions tensor;
    tensor.full_ns_tensor = true;  // but eta1 = eta2 = 0 in the default model
    CHECK_THROWS_AS(Scheme(sp1, ModelParams{}, tensor), std::invalid_argument);
}
