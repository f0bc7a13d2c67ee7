// ============================================================================
// qinsk command line interface
//
//   qinsk run      --config FILE [--out DIR]     march one configuration
//   qinsk converge --config FILE --levels N1,N2  mesh refinement study
//   qinsk check                                  discretization self-audit
//
// Exit codes: 0 success, 1 usage/configuration/check failure, 2 solver
// nonconvergence.
// ============================================================================
#include "qinsk/driver.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace {

std::string slurp(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw qinsk::ConfigError(0, qinsk::msg("cannot read config file '", path, "'"));
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

std::vector<int> parse_levels(const std::string& text)
{
    std::vector<int> levels;
    std::istringstream is(text);
    std::string item;
    while (std::getline(is, item, ',')) {
        if (item.empty()) continue;
        levels.push_back(std::stoi(item));
    }
    return levels;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"qinsk - discontinuous Galerkin two-phase flow simulator"};
    app.set_version_flag("--version", std::string(qinsk::version_string));
    app.require_subcommand(1);

    std::string config_path, out_dir, levels_text;

    CLI::App* run = app.add_subcommand("run", "march one configuration in time");
    run->add_option("--config", config_path, "configuration file")->required();
    run->add_option("--out", out_dir, "output directory (overrides the config)");

    CLI::App* conv = app.add_subcommand("converge", "mesh refinement study");
    conv->add_option("--config", config_path, "configuration file")->required();
    conv->add_option("--levels", levels_text, "comma separated mesh sizes, e.g. 32,64,128")
        ->required();
    conv->add_option("--out", out_dir, "output directory (overrides the config)");

    CLI::App* check = app.add_subcommand("check", "run the discretization self-audit");

    CLI11_PARSE(app, argc, argv);

    try {
        if (check->parsed()) {
            return qinsk::run_checks(std::cout) ? 0 : 1;
        }

        qinsk::RunConfig cfg = qinsk::parse_config(slurp(config_path));
        if (!out_dir.empty()) cfg.output_dir = out_dir;

        if (run->parsed()) {
            qinsk::RunSummary summary = qinsk::run_simulation(cfg, &std::cout);
            const qinsk::EnergyReport& last = summary.reports.back();
            std::cout << "done: E=" << last.energy << "  mass=" << last.mass
                      << "  max|v|=" << last.max_velocity << "\n"
                      << "artifacts in " << summary.output_dir << "\n";
            return 0;
        }

        // converge
        std::vector<int> levels = parse_levels(levels_text);
        auto rows = qinsk::run_convergence(cfg, levels, &std::cout);
        std::cout << "N,e_phi,EOC,e_v,EOC,e_lambda,EOC\n";
        for (size_t i = 0; i < rows.size(); ++i) {
            auto eoc = [&](double ef, double ec) -> std::string {
                if (i == 0 || !(ef > 0.0) || !(ec > 0.0)) return {};
                double r = static_cast<double>(rows[i].n) / rows[i - 1].n;
                std::ostringstream os;
                os.precision(4);
                os << std::log(ec / ef) / std::log(r);
                return os.str();
            };
            std::cout << rows[i].n << ',' << rows[i].e_phi << ','
                      << (i ? eoc(rows[i].e_phi, rows[i - 1].e_phi) : "") << ',' << rows[i].e_v
                      << ',' << (i ? eoc(rows[i].e_v, rows[i - 1].e_v) : "") << ','
                      << rows[i].e_lambda << ','
                      << (i ? eoc(rows[i].e_lambda, rows[i - 1].e_lambda) : "") << '\n';
        }
        std::cout << "table written to " << cfg.output_dir << "/convergence.csv\n";
        return 0;
    } catch (const qinsk::NewtonFailure& err) {
        std::cerr << "solver failure at step " << err.step << ": " << err.what() << "\n";
        return 2;
    } catch (const qinsk::ConfigError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
}
