// ============================================================================
// qinsk/driver.hpp - end-to-end drivers behind the command line interface
//
//  * run_simulation:  build mesh/space/scheme from a RunConfig, march the
//                     fully discrete system, and leave manifest.txt,
//                     timeseries.csv and field snapshots in the output
//                     directory.
//  * run_convergence: mesh refinement study against the exact traveling-free
//                     interface profile, with the time step slaved to h^2.
//  * run_checks:      fast self-audit of the discretization invariants, used
//                     by the `check` subcommand.
// ============================================================================
#pragma once

#include "qinsk/config.hpp"
#include "qinsk/diagnostics.hpp"
#include "qinsk/forms.hpp"
#include "qinsk/io.hpp"
#include "qinsk/scheme.hpp"

#include <cstdio>
#include <filesystem>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace qinsk {

inline double mesh_size(const Mesh& m)
{
    double h = 0.0;
    for (const auto& g : m.geom) h = std::max(h, g.diameter);
    return h;
}

// ----------------------------------------------------------------------------
// run_simulation
// ----------------------------------------------------------------------------

struct RunSummary {
    double k = 0.0;  // effective step size (resolved h^2 policy)
    int steps = 0;
    std::string output_dir;
    std::vector<EnergyReport> reports;  // one per state, steps + 1 rows
};

namespace detail {

inline std::string snapshot_path(const std::string& dir, int step, const char* ext)
{
    char name[32];
    std::snprintf(name, sizeof(name), "state_%06d", step);
    return dir + "/" + name + ext;
}

} // namespace detail

inline RunSummary run_simulation(const RunConfig& cfg, std::ostream* log = nullptr)
{
    cfg.validate();
    Mesh mesh = cfg.mesh.build();
    DgSpace sp(mesh, cfg.degree);
    Scheme sch(sp, cfg.model, cfg.scheme_options());

    RunSummary summary;
    summary.k = cfg.k_is_h2 ? mesh_size(mesh) * mesh_size(mesh) : cfg.k;
    summary.steps = cfg.step_count(summary.k);
    summary.output_dir = cfg.output_dir;

    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    write_manifest(cfg.output_dir + "/manifest.txt", cfg);
    const char* ext = snapshot_extension(sp, cfg.snapshot_format);

    State st = sch.initial_state(cfg.initial_condition());
    summary.reports.push_back(energy_report(sch, st));
    write_field_snapshot(sp, st, detail::snapshot_path(cfg.output_dir, 0, ext),
                         cfg.snapshot_format);
    if (log)
        *log << "run: " << cfg.case_name << ", " << mesh.num_elements() << " elements, degree "
             << cfg.degree << ", k = " << summary.k << ", " << summary.steps << " steps\n";

    auto flush_outputs = [&]() {
        write_timeseries(cfg.output_dir + "/timeseries.csv", summary.reports);
    };

    try {
        for (int n = 1; n <= summary.steps; ++n) {
            StepReport rep;
            State next = sch.newton_solve(st, summary.k, cfg.newton, &rep);
            summary.reports.push_back(energy_report(sch, next, &st, summary.k));
            st = std::move(next);
            const bool cadence = cfg.snapshot_every > 0 && n % cfg.snapshot_every == 0;
            if (cadence || n == summary.steps)
                write_field_snapshot(sp, st, detail::snapshot_path(cfg.output_dir, n, ext),
                                     cfg.snapshot_format);
            if (log) {
                const EnergyReport& r = summary.reports.back();
                *log << "step " << n << "  t=" << r.t << "  E=" << r.energy
                     << "  dev=" << r.deviation << "  max|v|=" << r.max_velocity
                     << "  newton=" << rep.iterations << "\n";
            }
        }
    } catch (const NewtonFailure&) {
        flush_outputs();  // keep the partial series for post-mortem inspection
        throw;
    }
    flush_outputs();
    return summary;
}

// ----------------------------------------------------------------------------
// run_convergence
// ----------------------------------------------------------------------------

// Refinement study for the smooth stationary-interface case: for each N the
// interval mesh is rebuilt with N cells, the step is k = h^2, and the errors
// are L-infinity in time over all computed states of the spatial L2 error.
inline std::vector<ConvergenceRow> run_convergence(const RunConfig& base,
                                                   const std::vector<int>& levels,
                                                   std::ostream* log = nullptr)
{
    if (base.case_kind() != InitialCondition::Kind::steady_tanh)
        throw ConfigError(0, "convergence study needs case = test1 (steady-tanh)");
    if (base.mesh.kind != MeshSpec::Kind::interval)
        throw ConfigError(0, "convergence study needs an interval mesh");
    if (levels.empty()) throw ConfigError(0, "convergence study needs at least one level");

    const double gamma = base.model.gamma;
    std::vector<ConvergenceRow> rows;
    for (int N : levels) {
        RunConfig cfg = base;
        cfg.mesh.n = N;
        Mesh mesh = cfg.mesh.build();
        DgSpace sp(mesh, cfg.degree);
        Scheme sch(sp, cfg.model, cfg.scheme_options());
        const double h = mesh_size(mesh);
        const double k = cfg.k_is_h2 ? h * h : cfg.k;
        const int steps = cfg.step_count(k);

        std::vector<State> traj;
        traj.push_back(sch.initial_state(cfg.initial_condition()));
        for (int n = 0; n < steps; ++n)
            traj.push_back(sch.newton_solve(traj.back(), k, cfg.newton));

        ConvergenceRow row;
        row.n = N;
        row.e_phi = field_error_norm(
            sp, traj, [&](const Vec& x, double, double* out) { out[0] = tanh_profile(x[0], gamma); },
            Field::phi);
        row.e_v = field_error_norm(
            sp, traj, [&](const Vec&, double, double* out) { out[0] = 0.0; }, Field::v);
        row.e_lambda = field_error_norm(
            sp, traj, [&](const Vec&, double, double* out) { out[0] = 0.0; }, Field::lambda);
        rows.push_back(row);
        if (log)
            *log << "N=" << N << "  k=" << k << "  e_phi=" << row.e_phi << "  e_v=" << row.e_v
                 << "  e_lambda=" << row.e_lambda << "\n";
    }

    namespace fs = std::filesystem;
    fs::create_directories(base.output_dir);
    write_manifest(base.output_dir + "/manifest.txt", base);
    write_convergence_table(base.output_dir + "/convergence.csv", rows);
    return rows;
}

// ----------------------------------------------------------------------------
// run_checks
// ----------------------------------------------------------------------------

// Small, fast property audit.  Each check prints one `ok`/`FAIL` line; the
// return value is true when everything passed.  Meant to finish in seconds.
inline bool run_checks(std::ostream& os)
{
    bool all_ok = true;
    auto report = [&](const char* name, bool ok, const std::string& detail = {}) {
        os << (ok ? "ok   " : "FAIL ") << name;
        if (!ok && !detail.empty()) os << "  (" << detail << ")";
        os << "\n";
        all_ok = all_ok && ok;
    };

    // quadrature rules integrate monomials to declared degree
    {
        double worst = 0.0;
        for (int deg = 1; deg <= 8; ++deg) {
            QuadRule r = interval_rule(deg);
            for (int p = 0; p <= deg; ++p) {
                double s = 0.0;
                for (int q = 0; q < r.size(); ++q)
                    s += r.weights[q] * std::pow(r.points[q][0], p);
                worst = std::max(worst, std::abs(s - 1.0 / (p + 1)));
            }
        }
        for (int deg = 1; deg <= 6; ++deg) {
            QuadRule r = triangle_rule(deg);
            for (int px = 0; px + 0 <= deg; ++px)
                for (int py = 0; px + py <= deg; ++py) {
                    double s = 0.0;
                    for (int q = 0; q < r.size(); ++q)
                        s += r.weights[q] * std::pow(r.points[q][0], px) *
                             std::pow(r.points[q][1], py);
                    // exact integral over the unit triangle: px! py! / (px+py+2)!
                    double exact = 1.0;
                    for (int i = 1; i <= py; ++i) exact *= static_cast<double>(i) / (px + i);
                    exact /= (px + py + 1.0) * (px + py + 2.0);
                    worst = std::max(worst, std::abs(s - exact));
                }
        }
        report("quadrature exactness", worst < 1e-13, msg("worst error ", worst));
    }

    // basis orthonormality under the matching quadrature
    {
        double worst = 0.0;
        for (int dim = 1; dim <= 2; ++dim)
            for (int p = 1; p <= 3; ++p) {
                const int nm = space_dimension(dim, p);
                QuadRule r = dim == 1 ? interval_rule(2 * p + 2) : triangle_rule(2 * p + 2);
                std::vector<double> bv;
                std::vector<Vec> bg;
                Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(nm, nm);
                for (int q = 0; q < r.size(); ++q) {
                    basis_eval(dim, p, r.points[q], bv, bg);
                    for (int i = 0; i < nm; ++i)
                        for (int j = 0; j < nm; ++j) gram(i, j) += r.weights[q] * bv[i] * bv[j];
                }
                worst = std::max(worst,
                                 (gram - Eigen::MatrixXd::Identity(nm, nm)).lpNorm<Eigen::Infinity>());
            }
        report("basis orthonormality", worst < 1e-12, msg("worst Gram error ", worst));
    }

    // mesh conformity of all three builders
    {
        bool ok = true;
        std::string why;
        try {
            check_conformity(build_interval_mesh(-1.0, 1.0, 7));
            check_conformity(build_rectangle_mesh(0.0, 1.0, 0.0, 2.0, 3, 5));
            check_conformity(build_disk_mesh(1.0, 3));
        } catch (const std::exception& err) {
            ok = false;
            why = err.what();
        }
        report("mesh conformity", ok, why);
    }

    // secant identity of the well difference quotient
    {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> dist(-1.6, 1.6);
        double worst = 0.0;
        for (int trial = 0; trial < 10000; ++trial) {
            double u = dist(rng), w = dist(rng);
            for (double A : {0.0, 4.0}) {
                double dq = well_dq(u, w, A);
                double ref = std::abs(w - u) < 1e-12
                                 ? well_d(0.5 * (u + w), A)
                                 : (well(w, A) - well(u, A)) / (w - u);
                worst = std::max(worst, std::abs(dq - ref) / std::max(1.0, std::abs(ref)));
            }
        }
        report("well difference quotient", worst < 1e-9, msg("worst relative error ", worst));
    }

    // interior penalty forms: symmetric, negative semidefinite, zero on constants
    {
        Mesh mesh = build_rectangle_mesh(0.0, 1.0, 0.0, 1.0, 3, 3);
        DgSpace sp(mesh, 1);
        const double sigma = min_penalty(1);
        SparseMat A1 = assemble_a1(sp, sigma);
        SparseMat A2 = assemble_a2(sp, sigma);
        double worst = (Eigen::MatrixXd(A1) - Eigen::MatrixXd(A1.transpose())).lpNorm<Eigen::Infinity>();
        worst = std::max(worst, (Eigen::MatrixXd(A2) - Eigen::MatrixXd(A2.transpose()))
                                    .lpNorm<Eigen::Infinity>());
        Eigen::VectorXd ones = l2_project_scalar(sp, [](const Vec&) { return 1.0; });
        worst = std::max(worst, (A1 * ones).lpNorm<Eigen::Infinity>());
        std::mt19937_64 rng(11);
        std::normal_distribution<double> gauss;
        double max_quad = 0.0;
        for (int trial = 0; trial < 5; ++trial) {
            Eigen::VectorXd w(sp.scalar_size());
            for (int i = 0; i < w.size(); ++i) w[i] = gauss(rng);
            max_quad = std::max(max_quad, w.dot(A1 * w));
            Eigen::VectorXd u(sp.field_size(2));
            for (int i = 0; i < u.size(); ++i) u[i] = gauss(rng);
            max_quad = std::max(max_quad, u.dot(A2 * u));
        }
        report("interior penalty forms", worst < 1e-10 && max_quad < 1e-10,
               msg("symmetry/const defect ", worst, ", max quadratic form ", max_quad));
    }

    // the discrete gradient reproduces gradients of continuous polynomials
    {
        Mesh mesh = build_interval_mesh(-1.0, 1.0, 12);
        DgSpace sp(mesh, 2);
        SparseMat G = assemble_gradient(sp);
        Eigen::VectorXd w = l2_project_scalar(sp, [](const Vec& x) { return x[0] * x[0]; });
        Eigen::VectorXd gx = l2_project(sp, 1, [](const Vec& x, double* o) { o[0] = 2.0 * x[0]; });
        double worst = (G * w - gx).lpNorm<Eigen::Infinity>();
        report("discrete gradient exactness", worst < 1e-12, msg("worst defect ", worst));
    }

    // Jacobian consistency against central finite differences on a tiny mesh
    {
        Mesh mesh = build_interval_mesh(-1.0, 1.0, 4);
        DgSpace sp(mesh, 1);
        ModelParams mp;
        Scheme sch(sp, mp);
        State s0 = sch.initial_state({InitialCondition::Kind::random, 5, 0.05});
        State s1 = s0;
        std::mt19937_64 rng(17);
        std::normal_distribution<double> gauss(0.0, 0.01);
        Eigen::VectorXd y1 = sch.pack(s1);
        for (int i = 0; i < y1.size(); ++i) y1[i] += gauss(rng);
        sch.unpack(y1, s1);
        const double k = 1e-2, eps = 1e-6;
        SparseMat J = sch.assemble_jacobian(s0, s1, k);
        Eigen::MatrixXd Jd(J), Jfd(J.rows(), J.cols());
        for (int j = 0; j < y1.size(); ++j) {
            Eigen::VectorXd yp = y1, ym = y1;
            yp[j] += eps;
            ym[j] -= eps;
            State sp1 = s1, sm1 = s1;
            sch.unpack(yp, sp1);
            sch.unpack(ym, sm1);
            Jfd.col(j) = (sch.assemble_residual(s0, sp1, k) - sch.assemble_residual(s0, sm1, k)) /
                         (2.0 * eps);
        }
        double rel = (Jd - Jfd).lpNorm<Eigen::Infinity>() / Jd.lpNorm<Eigen::Infinity>();
        report("jacobian vs finite differences", rel < 1e-5, msg("relative defect ", rel));
    }

    // discrete energy identity and mass conservation on a short random run
    {
        Mesh mesh = build_interval_mesh(-1.0, 1.0, 16);
        DgSpace sp(mesh, 1);
        ModelParams mp;
        Scheme sch(sp, mp);
        State st = sch.initial_state({InitialCondition::Kind::random, 3, 0.01});
        const double mass0 = total_mass(sch, st);
        const double e0 = discrete_energy(sch, st);
        double worst_dev = 0.0, worst_mass = 0.0;
        bool ok = true;
        std::string why;
        try {
            for (int n = 0; n < 5; ++n) {
                State next = sch.newton_solve(st, 0.01, NewtonSettings{});
                worst_dev = std::max(worst_dev, std::abs(step_energy_deviation(sch, st, next, 0.01)));
                worst_mass = std::max(worst_mass, std::abs(total_mass(sch, next) - mass0));
                st = std::move(next);
            }
        } catch (const std::exception& err) {
            ok = false;
            why = err.what();
        }
        ok = ok && worst_dev < 1e-10 * std::max(1.0, std::abs(e0)) && worst_mass < 1e-12;
        if (why.empty()) why = msg("max deviation ", worst_dev, ", max mass drift ", worst_mass);
        report("energy identity and mass", ok, why);
    }

    // pure phase is a fixed point reached without Newton iterations
    {
        Mesh mesh = build_interval_mesh(0.0, 1.0, 8);
        DgSpace sp(mesh, 1);
        ModelParams mp;
        Scheme sch(sp, mp);
        State st = sch.empty_state();
        st.phi = l2_project_scalar(sp, [](const Vec&) { return 1.0; });
        st.q = sch.gradient_matrix() * st.phi;  // zero: constants have no jumps
        StepReport rep;
        State next = sch.newton_solve(st, 0.01, NewtonSettings{}, &rep);
        double drift = (next.phi - st.phi).lpNorm<Eigen::Infinity>() +
                       next.v.lpNorm<Eigen::Infinity>();
        report("pure phase fixed point", rep.iterations == 0 && drift < 1e-12,
               msg("iterations ", rep.iterations, ", drift ", drift));
    }

    return all_ok;
}

} // namespace qinsk
