#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "waveadapt/adapt.hpp"

namespace waveadapt {

/// Discrete energy grew past the configured limit.
class InstabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Experiment { forced, traveling, splitting };

Experiment parse_experiment(const std::string& name);
std::string to_string(Experiment e);

struct SolverConfig {
    Experiment experiment = Experiment::traveling;
    double a = -10.0;
    double b = 10.0;
    double c = 1.0;
    double h_c = 0.11;
    unsigned depth_max = 6;
    double tol_H = 20.0;
    double tol_C = 1e-4;
    double theta = 0.8;
    double T = 1.33;
    double cfl_safety = 1.0;
    TransferMode transfer = TransferMode::interpolation;
    double nu = 0.0;
    /// Forced-wave step ratio on the prescribed window.
    int forced_p = 2;
    Acceptance acceptance = Acceptance::min;
    InitMarking init_marking = InitMarking::dorfler;
    double threshold_divisor = 0.0;
    double init_tol = -1.0;
    int max_iterations = 30;
    double instability_factor = 10.0;
    std::string out_dir;

    /// Experiment defaults for T.
    static SolverConfig defaults(Experiment e);
    void validate() const;
    int num_steps() const;
    double dt() const;
};

/// Parses a flat JSON object over `base`; unknown keys are rejected.
SolverConfig config_from_json(const std::string& text, SolverConfig base);
std::string config_to_json(const SolverConfig& cfg);

/// Closed-form solution with u, its time and space derivatives, and the source.
struct ExactSolution {
    std::function<double(double, double)> u;
    std::function<double(double, double)> ut;
    std::function<double(double, double)> ux;
    std::function<double(double, double)> f;  // empty when zero
    ScalarFunction u0_xx;
    ScalarFunction v0_xx;

    static ExactSolution for_experiment(Experiment e);
    Problem problem() const;
};

/// Coarse mesh of size h_c anchored at 0; a boundary remainder is merged into its neighbour.
MacroMesh anchored_macro_mesh(double a, double b, double h_c);

/// Refined window [s, s + 2] over ceil(2 / h_c) macro elements with s = h_c floor(t / h_c).
MeshSnapshot forced_wave_schedule(const ForestPtr& forest, double t, double h_c);

struct Interval1 {
    double left;
    double right;
};

struct StepSummary {
    int n = 0;  // index of the new level, t = t_n
    double t = 0.0;
    std::size_t dofs = 0;
    std::size_t fine_dofs = 0;
    int p = 1;
    double energy = 0.0;
    int iterations = 1;
    std::size_t refined = 0;
    std::size_t coarsened = 0;
    double eps0_tested = 0.0;
    double eps1_tested = 0.0;
    double energy_error = 0.0;       // of U^n
    double velocity_error = 0.0;     // L2 of V^{n-1/2} at t_{n-1/2}
    std::vector<Interval1> fine_regions;
    double fine_centroid = 0.0;
};

struct RunReport {
    SolverConfig config;
    int N = 0;
    double dt = 0.0;
    std::vector<StepSummary> steps;
    std::vector<IndicatorRecord> records;
    double initial_error = 0.0;
    double max_energy_error = 0.0;
    double max_velocity_error = 0.0;
    double bound_energy = 0.0;
    double bound_l2 = 0.0;
    std::size_t dofs_uniform = 0;
    double memory_ratio = 0.0;
    double work_ratio = 0.0;
    double seconds = 0.0;
};

RunReport run_experiment(const SolverConfig& config);

/// memory = max dofs / uniform dofs; work = Σ (coarse + p fine) / (N 2^depth uniform dofs).
std::pair<double, double> accounting(const RunReport& report, unsigned depth);

struct ConvergenceRow {
    double h = 0.0;
    int N = 0;
    double dt = 0.0;
    double energy_error = 0.0;
    double velocity_error = 0.0;
    double bound_energy = 0.0;
    double bound_l2 = 0.0;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    double energy_slope = 0.0;
    double velocity_slope = 0.0;
    double bound_energy_slope = 0.0;
    double bound_l2_slope = 0.0;
};

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

ConvergenceTable convergence_study(const SolverConfig& config, const std::vector<double>& hs);
void write_convergence_csv(const std::filesystem::path& file, const ConvergenceTable& table);

/// Maximal runs of elements finer than h_ref, merged across shared nodes.
std::vector<Interval1> fine_regions(const FeSpace& space);

}  // namespace waveadapt
