// ============================================================================
// qinsk/io.hpp - on-disk artifact formats
//
// All files are plain text with LF line endings and doubles printed via
// printf "%.17g", which round-trips IEEE binary64 exactly.  Writing the same
// in-memory state twice yields byte-identical files.
//
//   timeseries.csv   one row per accepted time step (plus the initial state):
//                    step,t,energy,mass,deviation,max_velocity,
//                    diss_reactive,diss_diffusive,diss_viscous
//   state_*.csv      1D snapshot: x,phi,v,lambda,a,b,q sampled at the volume
//                    quadrature points in element order
//   state_*.vtk      2D snapshot: legacy VTK unstructured grid, element-mean
//                    cell data for phi/lambda/a/b and the velocity vector
//   manifest.txt     everything needed to reproduce the run bit for bit:
//                    version, build commit, seed, and the full configuration
//   convergence.csv  N,e_phi,EOC,e_v,EOC,e_lambda,EOC (EOC blank on row one)
// ============================================================================
#pragma once

#include "qinsk/config.hpp"
#include "qinsk/diagnostics.hpp"
#include "qinsk/scheme.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qinsk {

namespace detail {

inline std::string fmt_g17(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::ofstream open_output(const std::string& path)
{
    std::ofstream os(path, std::ios::binary);  // binary: keep LF endings everywhere
    if (!os) throw std::runtime_error(msg("cannot open '", path, "' for writing"));
    return os;
}

} // namespace detail

// ----------------------------------------------------------------------------
// Time series
// ----------------------------------------------------------------------------

inline void write_timeseries(const std::string& path, const std::vector<EnergyReport>& rows)
{
    using detail::fmt_g17;
    auto os = detail::open_output(path);
    os << "step,t,energy,mass,deviation,max_velocity,"
          "diss_reactive,diss_diffusive,diss_viscous\n";
    for (const auto& r : rows) {
        os << r.step << ',' << fmt_g17(r.t) << ',' << fmt_g17(r.energy) << ','
           << fmt_g17(r.mass) << ',' << fmt_g17(r.deviation) << ','
           << fmt_g17(r.max_velocity) << ',' << fmt_g17(r.diss_reactive) << ','
           << fmt_g17(r.diss_diffusive) << ',' << fmt_g17(r.diss_viscous) << '\n';
    }
}

// ----------------------------------------------------------------------------
// Field snapshots
// ----------------------------------------------------------------------------

namespace detail {

inline void write_snapshot_columns(const DgSpace& sp, const State& st, std::ofstream& os)
{
    const Mesh& m = *sp.mesh;
    const int d = m.dim;
    if (d == 1)
        os << "x,phi,v,lambda,a,b,q\n";
    else
        os << "x,y,phi,vx,vy,lambda,a,b,qx,qy\n";
    const QuadRule& rule = sp.vrule;
    for (int e = 0; e < m.num_elements(); ++e) {
        for (int q = 0; q < sp.nvq; ++q) {
            const Vec& x = sp.vol_qpoint[static_cast<size_t>(e) * sp.nvq + q];
            const Vec& xi = rule.points[q];
            double phi, lambda, a, b;
            double v[2] = {0, 0}, dq[2] = {0, 0};
            eval_field(sp, 1, st.phi, e, xi, &phi);
            eval_field(sp, d, st.v, e, xi, v);
            eval_field(sp, 1, st.lambda, e, xi, &lambda);
            eval_field(sp, 1, st.a, e, xi, &a);
            eval_field(sp, 1, st.b, e, xi, &b);
            eval_field(sp, d, st.q, e, xi, dq);
            os << fmt_g17(x[0]);
            if (d == 2) os << ',' << fmt_g17(x[1]);
            os << ',' << fmt_g17(phi);
            for (int c = 0; c < d; ++c) os << ',' << fmt_g17(v[c]);
            os << ',' << fmt_g17(lambda) << ',' << fmt_g17(a) << ',' << fmt_g17(b);
            for (int c = 0; c < d; ++c) os << ',' << fmt_g17(dq[c]);
            os << '\n';
        }
    }
}

// Element mean of one component of a coefficient field.
inline double element_mean(const DgSpace& sp, const Eigen::VectorXd& coef, int e, int comp,
                           int ncomp)
{
    double num = 0.0;
    for (int q = 0; q < sp.nvq; ++q) {
        size_t qq = static_cast<size_t>(e) * sp.nvq + q;
        double u = 0.0;
        for (int i = 0; i < sp.nmodes; ++i)
            u += coef[sp.dof(e, comp, ncomp, i)] * sp.vol_val[qq * sp.nmodes + i];
        num += sp.vol_weight[qq] * u;
    }
    return num / sp.mesh->geom[e].volume;
}

inline void write_snapshot_vtk(const DgSpace& sp, const State& st, std::ofstream& os)
{
    const Mesh& m = *sp.mesh;
    if (m.dim != 2)
        throw std::runtime_error("vtk-legacy snapshots need a two-dimensional mesh");
    os << "# vtk DataFile Version 3.0\n";
    os << "qinsk state t=" << fmt_g17(st.t) << " step=" << st.step << "\n";
    os << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << m.num_vertices() << " double\n";
    for (const Vec& x : m.vertices)
        os << fmt_g17(x[0]) << ' ' << fmt_g17(x[1]) << " 0\n";
    const int ne = m.num_elements();
    os << "CELLS " << ne << ' ' << 4 * ne << "\n";
    for (const auto& el : m.elements)
        os << "3 " << el[0] << ' ' << el[1] << ' ' << el[2] << "\n";
    os << "CELL_TYPES " << ne << "\n";
    for (int e = 0; e < ne; ++e) os << "5\n";
    os << "CELL_DATA " << ne << "\n";
    auto scalars = [&](const char* name, const Eigen::VectorXd& coef) {
        os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (int e = 0; e < ne; ++e) os << fmt_g17(element_mean(sp, coef, e, 0, 1)) << "\n";
    };
    scalars("phi", st.phi);
    scalars("lambda", st.lambda);
    scalars("a", st.a);
    scalars("b", st.b);
    os << "VECTORS velocity double\n";
    for (int e = 0; e < ne; ++e)
        os << fmt_g17(element_mean(sp, st.v, e, 0, 2)) << ' '
           << fmt_g17(element_mean(sp, st.v, e, 1, 2)) << " 0\n";
}

} // namespace detail

// Snapshot of a full state.  `automatic` picks columns in 1D and vtk-legacy
// in 2D; the suffix of `path` is the caller's business.
inline void write_field_snapshot(const DgSpace& sp, const State& st, const std::string& path,
                                 SnapshotFormat format = SnapshotFormat::automatic)
{
    if (format == SnapshotFormat::automatic)
        format = sp.mesh->dim == 1 ? SnapshotFormat::columns : SnapshotFormat::vtk_legacy;
    auto os = detail::open_output(path);
    if (format == SnapshotFormat::columns)
        detail::write_snapshot_columns(sp, st, os);
    else
        detail::write_snapshot_vtk(sp, st, os);
}

inline const char* snapshot_extension(const DgSpace& sp, SnapshotFormat format)
{
    if (format == SnapshotFormat::automatic)
        format = sp.mesh->dim == 1 ? SnapshotFormat::columns : SnapshotFormat::vtk_legacy;
    return format == SnapshotFormat::columns ? ".csv" : ".vtk";
}

// ----------------------------------------------------------------------------
// Manifest
// ----------------------------------------------------------------------------

#ifndef QINSK_GIT_SHA
#define QINSK_GIT_SHA "unknown"
#endif

inline void write_manifest(const std::string& path, const RunConfig& cfg)
{
    auto os = detail::open_output(path);
    os << "version: " << version_string << "\n";
    os << "commit: " << QINSK_GIT_SHA << "\n";
    os << "mesh: " << cfg.mesh.to_string() << "\n";
    os << "seed: " << cfg.seed << "\n";
    os << "config:\n";
    std::istringstream cs(serialize_config(cfg));
    std::string line;
    while (std::getline(cs, line)) os << "  " << line << "\n";
}

// ----------------------------------------------------------------------------
// Convergence tables
// ----------------------------------------------------------------------------

struct ConvergenceRow {
    int n = 0;  // mesh cells per direction
    double e_phi = 0.0, e_v = 0.0, e_lambda = 0.0;
};

inline void write_convergence_table(const std::string& path,
                                    const std::vector<ConvergenceRow>& rows)
{
    using detail::fmt_g17;
    auto os = detail::open_output(path);
    os << "N,e_phi,EOC,e_v,EOC,e_lambda,EOC\n";
    for (size_t i = 0; i < rows.size(); ++i) {
        auto eoc = [&](double e_fine, double e_coarse) -> std::string {
            if (i == 0 || !(e_fine > 0.0) || !(e_coarse > 0.0)) return {};
            double ratio = static_cast<double>(rows[i].n) / rows[i - 1].n;
            return fmt_g17(std::log(e_coarse / e_fine) / std::log(ratio));
        };
        os << rows[i].n << ',' << fmt_g17(rows[i].e_phi) << ','
           << (i ? eoc(rows[i].e_phi, rows[i - 1].e_phi) : "") << ',' << fmt_g17(rows[i].e_v)
           << ',' << (i ? eoc(rows[i].e_v, rows[i - 1].e_v) : "") << ','
           << fmt_g17(rows[i].e_lambda) << ','
           << (i ? eoc(rows[i].e_lambda, rows[i - 1].e_lambda) : "") << '\n';
    }
}

} // namespace qinsk
