#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "waveadapt/estimator.hpp"
#include "waveadapt/stepper.hpp"

namespace waveadapt {

/// The refinement loop could not bring the indicators below the step tolerance.
class ToleranceUnreachableError : public std::runtime_error {
public:
    ToleranceUnreachableError(const std::string& what, double best) : std::runtime_error(what), best_(best) {}
    double best() const { return best_; }

private:
    double best_;
};

/// Greedy minimal Dörfler set: indices carrying at least theta of sum eta^2, largest first,
/// ties to the left. Returned in ascending order.
std::vector<std::size_t> dorfler_mark(std::span<const double> eta, double theta);

/// Indices with eta > theta * max eta.
std::vector<std::size_t> max_threshold_mark(std::span<const double> eta, double theta);

enum class InitMarking { dorfler, max_threshold };
enum class Acceptance { min, max };

struct AdaptConfig {
    double tol_H = 20.0;
    double tol_C = 1e-4;
    double theta = 0.8;
    int N = 1;
    unsigned depth_max = 6;
    InitMarking init_marking = InitMarking::dorfler;
    Acceptance acceptance = Acceptance::min;
    /// Per-step tolerance is tol_H / divisor; 0 selects N * 2^depth_max.
    double threshold_divisor = 0.0;
    /// Initial sweeps stop once the sweep indicator is below this; negative selects the step threshold.
    double init_tol = -1.0;
    int max_iterations = 30;

    void validate() const;
    double step_threshold() const;
};

/// Initial and source data. `f` may be empty for a homogeneous problem.
struct Problem {
    ScalarFunction u0;
    ScalarFunction v0;
    ScalarFunction u0_xx;
    ScalarFunction v0_xx;
    std::function<double(double, double)> f;
};

struct StepConfig {
    double dt = 0.0;
    double nu = 0.0;
    int p_cap = 64;
    TransferMode transfer = TransferMode::interpolation;
};

/// Initial mesh sweeps from the macro space; returns the space that carries U^0 and U^1.
SpacePtr initialize_adaptive(const Problem& problem, const SpacePtr& macro, const AdaptConfig& config);

struct StepReport {
    int n = 0;               // step n -> n+1
    double t_next = 0.0;     // t_{n+1}
    int iterations = 1;
    std::vector<ElementKey> refined;
    std::vector<ElementKey> coarsened;
    std::size_t dofs = 0;
    std::size_t fine_dofs = 0;
    int p = 1;
    double eps0_tested = 0.0;
    double eps1_tested = 0.0;
    std::vector<double> criterion_history;  // acceptance value per loop iteration
    double energy = 0.0;
    IndicatorRecord record;
};

/// Time loop over a rolling StepState. Each step either follows a prescribed next space
/// or runs the refine/recompute/coarsen loop.
class Driver {
public:
    Driver(Problem problem, StepConfig step, std::optional<AdaptConfig> adapt);

    /// U^0, V^0 and the Taylor step on V_1.
    void start(const SpacePtr& v1);
    StepReport step(const SpacePtr& prescribed = nullptr);

    const StepState& state() const { return state_; }
    const FeFunction& u0() const { return u0_; }
    const FeFunction& v0() const { return v0_; }
    /// eps0, eps1 of U^1 and V^{1/2} on V_1.
    double initial_eps0() const { return eps0_init_; }
    double initial_eps1() const { return eps1_init_; }
    const StepConfig& step_config() const { return step_; }

private:
    struct Attempt {
        SpacePtr space;
        FeFunction u;
        FeFunction u_next;
        FeFunction v_next;
        FeFunction f;
        int p = 1;
    };
    Attempt compute(const SpacePtr& space) const;

    Problem problem_;
    StepConfig step_;
    std::optional<AdaptConfig> adapt_;
    StepState state_;
    FeFunction u0_;
    FeFunction v0_;
    double eps0_init_ = 0.0;
    double eps1_init_ = 0.0;
};

}  // namespace waveadapt
