// ============================================================================
// qinsk/config.hpp - run configuration: key=value parsing, case defaults,
// canonical serialization
//
// Grammar (one setting per line):
//     key = value          # trailing comments allowed
// Blank lines and full-line comments are skipped.  Keys are fixed; unknown
// keys are rejected with their line number so typos in physics parameters
// cannot slip through.  The `case` key is mandatory and selects per-case
// defaults (mesh, step policy, body forces); every other key overrides the
// default it shadows.  serialize_config emits a canonical file that parses
// back to an equal configuration.
// ============================================================================
#pragma once

#include "qinsk/mesh.hpp"
#include "qinsk/scheme.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qinsk {

class ConfigError : public std::runtime_error {
public:
    ConfigError(int line_number, const std::string& what)
        : std::runtime_error(line_number > 0 ? msg("config line ", line_number, ": ", what)
                                             : msg("config: ", what)),
          line(line_number)
    {
    }
    int line;
};

// ----------------------------------------------------------------------------
// Mesh specification
// ----------------------------------------------------------------------------

struct MeshSpec {
    enum class Kind { interval, rectangle, disk };
    Kind kind = Kind::interval;
    // interval [a, b] with n cells
    double a = -1.0, b = 1.0;
    int n = 256;
    // rectangle [x0,x1] x [y0,y1] with nx-by-ny criss-cross macro cells
    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    int nx = 50, ny = 50;
    // polyhedral disk of given radius with `refinement` concentric rings
    double radius = 1.0;
    int refinement = 8;

    int dim() const { return kind == Kind::interval ? 1 : 2; }

    Mesh build() const
    {
        switch (kind) {
        case Kind::interval: return build_interval_mesh(a, b, n);
        case Kind::rectangle: return build_rectangle_mesh(x0, x1, y0, y1, nx, ny);
        default: return build_disk_mesh(radius, refinement);
        }
    }

    std::string to_string() const
    {
        std::ostringstream os;
        os.precision(17);
        if (kind == Kind::interval)
            os << "interval " << a << " " << b << " " << n;
        else if (kind == Kind::rectangle)
            os << "rectangle " << x0 << " " << x1 << " " << y0 << " " << y1 << " " << nx << " "
               << ny;
        else
            os << "disk " << radius << " " << refinement;
        return os.str();
    }

    static MeshSpec parse(const std::string& text, int line)
    {
        std::istringstream is(text);
        std::string word;
        if (!(is >> word)) throw ConfigError(line, "empty mesh specification");
        MeshSpec ms;
        auto want = [&](auto& field, const char* what) {
            if (!(is >> field)) throw ConfigError(line, msg("mesh: expected ", what));
        };
        if (word == "interval") {
            ms.kind = Kind::interval;
            want(ms.a, "left endpoint");
            want(ms.b, "right endpoint");
            want(ms.n, "cell count");
            if (!(ms.b > ms.a) || ms.n < 1) throw ConfigError(line, "mesh: bad interval");
        } else if (word == "rectangle") {
            ms.kind = Kind::rectangle;
            want(ms.x0, "x0");
            want(ms.x1, "x1");
            want(ms.y0, "y0");
            want(ms.y1, "y1");
            want(ms.nx, "nx");
            want(ms.ny, "ny");
            if (!(ms.x1 > ms.x0) || !(ms.y1 > ms.y0) || ms.nx < 1 || ms.ny < 1)
                throw ConfigError(line, "mesh: bad rectangle");
        } else if (word == "disk") {
            ms.kind = Kind::disk;
            want(ms.radius, "radius");
            want(ms.refinement, "refinement");
            if (!(ms.radius > 0.0) || ms.refinement < 1) throw ConfigError(line, "mesh: bad disk");
        } else {
            throw ConfigError(line, msg("mesh: unknown kind '", word, "'"));
        }
        std::string extra;
        if (is >> extra) throw ConfigError(line, msg("mesh: trailing text '", extra, "'"));
        return ms;
    }
};

// ----------------------------------------------------------------------------
// Run configuration
// ----------------------------------------------------------------------------

enum class SnapshotFormat { automatic, columns, vtk_legacy };

struct RunConfig {
    std::string case_name;  // required; one of the names in case_kind()
    MeshSpec mesh;
    int degree = 1;
    bool k_is_h2 = false;  // true: k = h^2 with h the largest element diameter
    double k = 0.01;
    double t_final = -1.0;  // when > 0 overrides `steps`
    int steps = 100;

    ModelParams model;
    bool full_tensor = false;
    double sigma = -1.0;  // negative -> min_penalty(degree)
    double omega = 0.0;
    Vec gravity = Vec::Zero();
    int pin_lambda = -1;

    NewtonSettings newton;
    std::uint64_t seed = 1;
    double amplitude = 0.01;

    std::string output_dir = "out";
    int snapshot_every = 0;  // 0: initial and final state only
    SnapshotFormat snapshot_format = SnapshotFormat::automatic;
    std::vector<int> levels;  // convergence-study mesh sizes

    InitialCondition::Kind case_kind() const
    {
        using K = InitialCondition::Kind;
        if (case_name == "test1" || case_name == "steady-tanh") return K::steady_tanh;
        if (case_name == "test2" || case_name == "test6" || case_name == "random")
            return K::random;
        if (case_name == "test3" || case_name == "bubbles") return K::bubbles;
        if (case_name == "test4" || case_name == "rotating-bubble") return K::rotating_bubble;
        if (case_name == "test5" || case_name == "rayleigh-taylor") return K::rayleigh_taylor;
        throw ConfigError(0, msg("unknown case '", case_name, "'"));
    }

    InitialCondition initial_condition() const { return {case_kind(), seed, amplitude}; }

    int step_count(double k_eff) const
    {
        if (t_final > 0.0) return std::max(1, static_cast<int>(std::llround(t_final / k_eff)));
        return steps;
    }

    SchemeOptions scheme_options() const
    {
        SchemeOptions opts;
        opts.sigma = sigma;
        opts.full_ns_tensor = full_tensor;
        opts.omega = omega;
        opts.gravity = gravity;
        opts.pin_lambda = pin_lambda;
        return opts;
    }

    void validate() const
    {
        case_kind();  // throws for unknown names
        if (degree < 1 || degree > 6) throw ConfigError(0, "degree must be in 1..6");
        if (!k_is_h2 && !(k > 0.0)) throw ConfigError(0, "timestep must be positive");
        if (steps < 0) throw ConfigError(0, "steps must be nonnegative");
        if (snapshot_every < 0) throw ConfigError(0, "snapshot_every must be nonnegative");
        if (omega != 0.0 && mesh.dim() != 2)
            throw ConfigError(0, "omega requires a two-dimensional mesh");
        if (full_tensor && mp_zero(model.eta1) && mp_zero(model.eta2))
            throw ConfigError(0, "full tensor viscosity needs eta1 or eta2");
        try {
            model.validate();
        } catch (const std::invalid_argument& err) {
            throw ConfigError(0, err.what());
        }
    }

private:
    static bool mp_zero(double x) { return x == 0.0; }
};

// ----------------------------------------------------------------------------
// Parsing
// ----------------------------------------------------------------------------

namespace detail {

inline std::string config_trim(const std::string& s)
{
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double config_number(const std::string& v, int line)
{
    try {
        size_t used = 0;
        double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(line, msg("expected a number, got '", v, "'"));
    }
}

inline long long config_integer(const std::string& v, int line)
{
    try {
        size_t used = 0;
        long long x = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(line, msg("expected an integer, got '", v, "'"));
    }
}

// Per-case defaults at desk scale; shipped configuration files override the
// mesh and horizon for the full-size experiments.
inline void apply_case_defaults(RunConfig& cfg)
{
    using K = InitialCondition::Kind;
    switch (cfg.case_kind()) {
    case K::steady_tanh:
        cfg.mesh = MeshSpec{};  // interval [-1,1]
        cfg.mesh.n = 256;
        cfg.k_is_h2 = true;
        cfg.steps = 10;
        break;
    case K::random:
        cfg.mesh = MeshSpec{};
        cfg.mesh.n = 256;
        if (cfg.case_name == "test6") {
            cfg.model.rho2 = 10.0;
            cfg.model.well_A = -1.0;  // resolved to (rho2/rho1)^2 after parsing
        }
        break;
    case K::bubbles:
        cfg.mesh.kind = MeshSpec::Kind::rectangle;
        cfg.mesh.x0 = 0.0;
        cfg.mesh.x1 = 1.0;
        cfg.mesh.y0 = 0.0;
        cfg.mesh.y1 = 1.0;
        cfg.mesh.nx = cfg.mesh.ny = 50;
        break;
    case K::rotating_bubble:
        cfg.mesh.kind = MeshSpec::Kind::disk;
        cfg.mesh.radius = 1.0;
        cfg.mesh.refinement = 10;
        cfg.model.eta1 = 0.001;
        cfg.model.eta2 = 0.005;
        cfg.full_tensor = true;
        cfg.omega = 2.0;
        break;
    case K::rayleigh_taylor:
        cfg.mesh.kind = MeshSpec::Kind::rectangle;
        cfg.mesh.x0 = -1.0;
        cfg.mesh.x1 = 1.0;
        cfg.mesh.y0 = -2.0;
        cfg.mesh.y1 = 2.0;
        cfg.mesh.nx = 20;
        cfg.mesh.ny = 40;
        cfg.gravity = Vec(0.0, 0.01);
        break;
    }
}

} // namespace detail

inline RunConfig parse_config(const std::string& text)
{
    using detail::config_integer;
    using detail::config_number;
    using detail::config_trim;

    // first pass: locate the case name so its defaults seed the config
    std::vector<std::pair<int, std::string>> lines;  // (line number, content)
    {
        std::istringstream is(text);
        std::string raw;
        int ln = 0;
        while (std::getline(is, raw)) {
            ++ln;
            size_t hash = raw.find('#');
            if (hash != std::string::npos) raw.erase(hash);
            std::string s = config_trim(raw);
            if (!s.empty()) lines.emplace_back(ln, s);
        }
    }

    RunConfig cfg;
    bool have_case = false;
    for (const auto& [ln, s] : lines) {
        size_t eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(ln, msg("expected key = value, got '", s, "'"));
        if (config_trim(s.substr(0, eq)) == "case") {
            cfg.case_name = config_trim(s.substr(eq + 1));
            try {
                detail::apply_case_defaults(cfg);
            } catch (const ConfigError&) {
                throw ConfigError(ln, msg("unknown case '", cfg.case_name, "'"));
            }
            have_case = true;
            break;
        }
    }
    if (!have_case) throw ConfigError(0, "missing required key 'case'");

    for (const auto& [ln, s] : lines) {
        size_t eq = s.find('=');
        std::string key = config_trim(s.substr(0, eq));
        std::string val = config_trim(s.substr(eq + 1));
        if (key.empty()) throw ConfigError(ln, "empty key");
        if (val.empty()) throw ConfigError(ln, msg("key '", key, "' has no value"));

        if (key == "case") {
            // consumed in the first pass
        } else if (key == "mesh") {
            cfg.mesh = MeshSpec::parse(val, ln);
        } else if (key == "degree") {
            cfg.degree = static_cast<int>(config_integer(val, ln));
        } else if (key == "timestep") {
            if (val == "h^2" || val == "h2") {
                cfg.k_is_h2 = true;
            } else {
                cfg.k_is_h2 = false;
                cfg.k = config_number(val, ln);
            }
        } else if (key == "t_final") {
            cfg.t_final = config_number(val, ln);
        } else if (key == "steps") {
            cfg.steps = static_cast<int>(config_integer(val, ln));
        } else if (key == "rho1") {
            cfg.model.rho1 = config_number(val, ln);
        } else if (key == "rho2") {
            cfg.model.rho2 = config_number(val, ln);
        } else if (key == "gamma") {
            cfg.model.gamma = config_number(val, ln);
        } else if (key == "eta") {
            cfg.model.eta = config_number(val, ln);
        } else if (key == "eta1") {
            cfg.model.eta1 = config_number(val, ln);
            cfg.full_tensor = true;
        } else if (key == "eta2") {
            cfg.model.eta2 = config_number(val, ln);
            cfg.full_tensor = true;
        } else if (key == "m_r") {
            cfg.model.m_r = config_number(val, ln);
        } else if (key == "m_j") {
            cfg.model.m_j = config_number(val, ln);
        } else if (key == "well") {
            std::istringstream ws(val);
            std::string kind;
            ws >> kind;
            if (kind == "quartic") {
                cfg.model.well_A = 0.0;
            } else if (kind == "modified") {
                double A = 0.0;
                if (ws >> A) {
                    if (!(A > 0.0)) throw ConfigError(ln, "well: A must be positive");
                    cfg.model.well_A = A;
                } else {
                    cfg.model.well_A = -1.0;  // resolved to (rho2/rho1)^2 below
                }
            } else {
                throw ConfigError(ln, msg("well: unknown kind '", kind, "'"));
            }
        } else if (key == "sigma") {
            if (val == "auto")
                cfg.sigma = -1.0;
            else
                cfg.sigma = config_number(val, ln);
        } else if (key == "omega") {
            cfg.omega = config_number(val, ln);
        } else if (key == "gravity") {
            std::istringstream gs(val);
            double gx = 0.0, gy = 0.0;
            if (!(gs >> gx)) throw ConfigError(ln, "gravity: expected one or two numbers");
            gs >> gy;
            cfg.gravity = Vec(gx, gy);
        } else if (key == "pin_lambda") {
            if (val == "auto")
                cfg.pin_lambda = -1;
            else if (val == "on")
                cfg.pin_lambda = 1;
            else if (val == "off")
                cfg.pin_lambda = 0;
            else
                throw ConfigError(ln, "pin_lambda: expected auto, on or off");
        } else if (key == "newton_tol") {
            cfg.newton.tolerance = config_number(val, ln);
        } else if (key == "newton_max_iter") {
            cfg.newton.max_iterations = static_cast<int>(config_integer(val, ln));
        } else if (key == "solver") {
            using S = NewtonSettings::Solver;
            if (val == "auto" || val == "automatic")
                cfg.newton.solver = S::automatic;
            else if (val == "sparse-lu")
                cfg.newton.solver = S::sparse_lu;
            else if (val == "umfpack")
                cfg.newton.solver = S::umfpack;
            else if (val == "bicgstab")
                cfg.newton.solver = S::bicgstab;
            else
                throw ConfigError(ln, msg("solver: unknown value '", val, "'"));
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(config_integer(val, ln));
        } else if (key == "amplitude") {
            cfg.amplitude = config_number(val, ln);
        } else if (key == "output") {
            cfg.output_dir = val;
        } else if (key == "snapshot_every") {
            cfg.snapshot_every = static_cast<int>(config_integer(val, ln));
        } else if (key == "snapshot_format") {
            if (val == "auto" || val == "automatic")
                cfg.snapshot_format = SnapshotFormat::automatic;
            else if (val == "columns")
                cfg.snapshot_format = SnapshotFormat::columns;
            else if (val == "vtk-legacy")
                cfg.snapshot_format = SnapshotFormat::vtk_legacy;
            else
                throw ConfigError(ln, msg("snapshot_format: unknown value '", val, "'"));
        } else if (key == "levels") {
            cfg.levels.clear();
            std::string item;
            std::istringstream lsraw(val);
            while (std::getline(lsraw, item, ',')) {
                item = config_trim(item);
                if (item.empty()) continue;
                cfg.levels.push_back(static_cast<int>(config_integer(item, ln)));
            }
            if (cfg.levels.empty()) throw ConfigError(ln, "levels: expected N1,N2,...");
        } else {
            throw ConfigError(ln, msg("unknown key '", key, "'"));
        }
    }

    // a modified well may defer its strength to the density ratio
    if (cfg.model.well_A < 0.0) {
        const double ratio = cfg.model.rho2 / cfg.model.rho1;
        const double r = std::max(ratio, 1.0 / ratio);
        cfg.model.well_A = r * r;
    }
    cfg.validate();
    return cfg;
}

// ----------------------------------------------------------------------------
// Canonical serialization (round-trips through parse_config)
// ----------------------------------------------------------------------------

inline std::string serialize_config(const RunConfig& cfg)
{
    std::ostringstream os;
    os.precision(17);
    os << "case = " << cfg.case_name << "\n";
    os << "mesh = " << cfg.mesh.to_string() << "\n";
    os << "degree = " << cfg.degree << "\n";
    if (cfg.k_is_h2)
        os << "timestep = h^2\n";
    else
        os << "timestep = " << cfg.k << "\n";
    if (cfg.t_final > 0.0)
        os << "t_final = " << cfg.t_final << "\n";
    else
        os << "steps = " << cfg.steps << "\n";
    os << "rho1 = " << cfg.model.rho1 << "\n";
    os << "rho2 = " << cfg.model.rho2 << "\n";
    os << "gamma = " << cfg.model.gamma << "\n";
    if (cfg.full_tensor) {
        os << "eta1 = " << cfg.model.eta1 << "\n";
        os << "eta2 = " << cfg.model.eta2 << "\n";
    } else {
        os << "eta = " << cfg.model.eta << "\n";
    }
    os << "m_r = " << cfg.model.m_r << "\n";
    os << "m_j = " << cfg.model.m_j << "\n";
    if (cfg.model.well_A > 0.0)
        os << "well = modified " << cfg.model.well_A << "\n";
    else
        os << "well = quartic\n";
    if (cfg.sigma >= 0.0) os << "sigma = " << cfg.sigma << "\n";
    if (cfg.omega != 0.0) os << "omega = " << cfg.omega << "\n";
    if (cfg.gravity.squaredNorm() != 0.0)
        os << "gravity = " << cfg.gravity[0] << " " << cfg.gravity[1] << "\n";
    if (cfg.pin_lambda >= 0) os << "pin_lambda = " << (cfg.pin_lambda ? "on" : "off") << "\n";
    os << "newton_tol = " << cfg.newton.tolerance << "\n";
    os << "newton_max_iter = " << cfg.newton.max_iterations << "\n";
    {
        using S = NewtonSettings::Solver;
        const char* name = cfg.newton.solver == S::automatic ? "automatic"
                           : cfg.newton.solver == S::sparse_lu ? "sparse-lu"
                           : cfg.newton.solver == S::umfpack   ? "umfpack"
                                                               : "bicgstab";
        os << "solver = " << name << "\n";
    }
    os << "seed = " << cfg.seed << "\n";
    os << "amplitude = " << cfg.amplitude << "\n";
    os << "output = " << cfg.output_dir << "\n";
    os << "snapshot_every = " << cfg.snapshot_every << "\n";
    if (cfg.snapshot_format != SnapshotFormat::automatic)
        os << "snapshot_format = "
           << (cfg.snapshot_format == SnapshotFormat::columns ? "columns" : "vtk-legacy") << "\n";
    if (!cfg.levels.empty()) {
        os << "levels = ";
        for (size_t i = 0; i < cfg.levels.size(); ++i)
            os << (i ? "," : "") << cfg.levels[i];
        os << "\n";
    }
    return os.str();
}

} // namespace qinsk
