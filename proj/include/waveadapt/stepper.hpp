#pragma once

#include <stdexcept>

#include "waveadapt/fespace.hpp"
#include "waveadapt/lts.hpp"

namespace waveadapt {

/// Discrete energy requested across a step whose mesh changed.
class EnergyUndefinedError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct FirstSteps {
    FeFunction u0;
    FeFunction v0;
    FeFunction u1;
};

/// U^0, V^0 by interpolation on `space`, then the Taylor step
/// U^1 = U^0 + dt V^0 + dt^2/2 (F^0 - Ã U^0). `f0` may be null for a zero source.
FirstSteps init_first_steps(const ScalarFunction& u0, const ScalarFunction& v0, const SpacePtr& space,
                            double dt, const FeFunction* f0, const LtsParams& params);

/// 2 U^n - U^{n-1} + dt^2 (F^n - Ã U^n), everything on the space of `u`.
FeFunction leapfrog_step(const FeFunction& u, const FeFunction& u_prev, const FeFunction* f, double dt,
                         const LtsParams& params);

/// (U^{n+1} - U^n) / dt on the space of U^{n+1}.
FeFunction velocity(const FeFunction& u_next, const FeFunction& u, double dt);

/// 1/2 |V^{n+1/2}|^2_lumped + 1/2 (M_lumped Ã U^{n+1}, U^n), invariant for f = 0 on a fixed mesh.
double discrete_energy(const FeFunction& u_next, const FeFunction& u, double dt, const LtsParams& params);

/// Rolling history for the adaptive driver and the estimators.
/// After step n the solution pair lives on V_n; `u_prev_own` keeps U^{n-1} on V_{n-1}.
struct StepState {
    int n = 0;
    double t = 0.0;
    double dt = 0.0;
    SpacePtr space;       // V_n
    SpacePtr space_prev;  // V_{n-1}
    FeFunction u;         // U^n on V_n
    FeFunction u_prev;    // U^{n-1} transferred to V_n
    FeFunction u_prev_own;
    // A_m U^m on V_m, for m = n, n-1, n-2. Empty while the history is short.
    FeFunction au;
    FeFunction au_prev;
    FeFunction au_prev2;
    // V^{n-1/2} on V_n and V^{n-3/2} on V_{n-1}.
    FeFunction v_half;
    FeFunction v_half_prev;
};

}  // namespace waveadapt
