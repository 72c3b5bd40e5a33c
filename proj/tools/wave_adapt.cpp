#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "waveadapt/harness.hpp"

using namespace waveadapt;

namespace {

SolverConfig load(const std::string& path, const std::string& experiment) {
    SolverConfig cfg = SolverConfig::defaults(experiment.empty() ? Experiment::traveling : parse_experiment(experiment));
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw std::invalid_argument("cannot read config " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        cfg = config_from_json(ss.str(), cfg);
    }
    return cfg;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) out.push_back(std::stod(item));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive leapfrog FEM with local time-stepping for the 1D wave equation"};
    app.require_subcommand(1);

    std::string config_path, experiment, out_dir, h_list;
    double hc = 0.0;
    auto* run = app.add_subcommand("run", "run one experiment");
    run->add_option("--config", config_path, "JSON config file");
    run->add_option("--experiment", experiment, "forced|traveling|splitting")
        ->check(CLI::IsMember({"forced", "traveling", "splitting"}));
    run->add_option("--hc", hc, "coarse mesh size")->check(CLI::PositiveNumber);
    run->add_option("--out", out_dir, "output directory");

    auto* conv = app.add_subcommand("converge", "forced-wave convergence study");
    conv->set_help_flag("--help", "print help");
    conv->add_option("--config", config_path, "JSON config file");
    conv->add_option("--h", h_list, "comma separated mesh sizes")->default_val("0.4,0.2,0.1,0.05");
    conv->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            SolverConfig cfg = load(config_path, experiment);
            // Flags override file values.
            if (!experiment.empty()) cfg.experiment = parse_experiment(experiment);
            if (hc > 0.0) cfg.h_c = hc;
            if (!out_dir.empty()) cfg.out_dir = out_dir;
            cfg.validate();
            const RunReport r = run_experiment(cfg);
            std::cout << to_string(cfg.experiment) << ": N=" << r.N << " dt=" << r.dt
                      << " max_energy_error=" << r.max_energy_error << " max_velocity_error=" << r.max_velocity_error
                      << " bound=" << r.bound_energy << " memory_ratio=" << r.memory_ratio
                      << " work_ratio=" << r.work_ratio << " seconds=" << r.seconds << '\n';
        } else {
            SolverConfig cfg = load(config_path, "forced");
            cfg.experiment = Experiment::forced;
            if (!out_dir.empty()) cfg.out_dir = out_dir;
            const ConvergenceTable t = convergence_study(cfg, parse_list(h_list));
            std::cout << "h,energy_error,velocity_error,bound_energy\n";
            for (const auto& row : t.rows) {
                std::cout << row.h << ',' << row.energy_error << ',' << row.velocity_error << ',' << row.bound_energy
                          << '\n';
            }
            std::cout << "slopes: energy=" << t.energy_slope << " velocity=" << t.velocity_slope
                      << " bound=" << t.bound_energy_slope << '\n';
        }
    } catch (const InstabilityError& e) {
        std::cerr << "instability: " << e.what() << '\n';
        return 2;
    } catch (const ToleranceUnreachableError& e) {
        std::cerr << "tolerance unreachable: " << e.what() << " (best " << e.best() << ")\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
