#include "waveadapt/stepper.hpp"

namespace waveadapt {

FirstSteps init_first_steps(const ScalarFunction& u0, const ScalarFunction& v0, const SpacePtr& space,
                            double dt, const FeFunction* f0, const LtsParams& params) {
    if (!(dt > 0.0)) {
        throw std::invalid_argument("time step must be positive");
    }
    FirstSteps out{interpolate(u0, space), interpolate(v0, space), FeFunction(space)};
    FeFunction accel = apply_lts(out.u0, dt, params);
    accel *= -1.0;
    if (f0 != nullptr) accel += *f0;
    out.u1 = out.u0;
    out.u1.axpy(dt, out.v0);
    out.u1.axpy(0.5 * dt * dt, accel);
    return out;
}

FeFunction leapfrog_step(const FeFunction& u, const FeFunction& u_prev, const FeFunction* f, double dt,
                         const LtsParams& params) {
    FeFunction next = apply_lts(u, dt, params);
    next *= -dt * dt;
    if (f != nullptr) next.axpy(dt * dt, *f);
    next.axpy(2.0, u);
    next -= u_prev;
    return next;
}

FeFunction velocity(const FeFunction& u_next, const FeFunction& u, double dt) {
    FeFunction v = u_next;
    v -= u;
    v *= 1.0 / dt;
    return v;
}

double discrete_energy(const FeFunction& u_next, const FeFunction& u, double dt, const LtsParams& params) {
    if (!same_space(*u_next.space(), *u.space())) {
        throw EnergyUndefinedError("discrete energy needs an unchanged mesh across the step");
    }
    const FeFunction aligned(u_next.space(), u.coeffs());
    const FeFunction v = velocity(u_next, aligned, dt);
    return 0.5 * lumped_inner(v, v) + 0.5 * lumped_inner(apply_lts(u_next, dt, params), aligned);
}

}  // namespace waveadapt
