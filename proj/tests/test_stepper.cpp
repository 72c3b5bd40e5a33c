#include <cmath>
#include <numbers>

#include "doctest.h"
#include "waveadapt/stepper.hpp"

using namespace waveadapt;

namespace {

SpacePtr uniform_space(int n) {
    auto f = std::make_shared<const Forest>(MacroMesh::uniform(0.0, 1.0, n));
    return FeSpace::create(MeshSnapshot::macro(f), SpaceOptions{1.0 / n, {}});
}

SpacePtr two_level_space() {
    auto f = std::make_shared<const Forest>(MacroMesh::uniform(0.0, 1.0, 16));
    MeshSnapshot m = MeshSnapshot::macro(f);
    m = refine(m, std::vector{m[6], m[7], m[8], m[9]}).mesh;
    return FeSpace::create(m, SpaceOptions{1.0 / 16.0, {}});
}

double sine(double x) { return std::sin(std::numbers::pi * x); }

}  // namespace

TEST_CASE("Taylor first step matches its formula") {
    const auto s = uniform_space(16);
    const double dt = 0.01;
    const LtsParams params(1, 0.0);
    const auto first = init_first_steps(sine, [](double x) { return x * (1.0 - x); }, s, dt, nullptr, params);
    const FeFunction au = apply_A(first.u0);
    for (std::size_t i = 0; i < s->num_dofs(); ++i) {
        const double expect = first.u0[i] + dt * first.v0[i] - 0.5 * dt * dt * au[i];
        CHECK(first.u1[i] == doctest::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("leapfrog conserves the discrete energy on a fixed mesh") {
    const auto s = uniform_space(64);
    const LtsParams params(1, 0.0);
    const double dt = 0.9 / 64.0;
    auto first = init_first_steps(sine, [](double) { return 0.0; }, s, dt, nullptr, params);
    FeFunction prev = first.u0;
    FeFunction cur = first.u1;
    const double e0 = discrete_energy(cur, prev, dt, params);
    double worst = 0.0;
    for (int n = 0; n < 1000; ++n) {
        FeFunction next = leapfrog_step(cur, prev, nullptr, dt, params);
        worst = std::max(worst, std::abs(discrete_energy(next, cur, dt, params) - e0) / e0);
        prev = std::move(cur);
        cur = std::move(next);
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("LTS leapfrog conserves energy and is time reversible") {
    const auto s = two_level_space();
    const LtsParams params(2, 0.0);
    const double dt = 0.04;
    auto bump = [](double x) { return std::exp(-50.0 * (x - 0.5) * (x - 0.5)) - std::exp(-12.5); };
    auto first = init_first_steps(bump, [](double) { return 0.0; }, s, dt, nullptr, params);
    FeFunction prev = first.u0;
    FeFunction cur = first.u1;
    const double e0 = discrete_energy(cur, prev, dt, params);
    for (int n = 0; n < 200; ++n) {
        FeFunction next = leapfrog_step(cur, prev, nullptr, dt, params);
        prev = std::move(cur);
        cur = std::move(next);
    }
    CHECK(discrete_energy(cur, prev, dt, params) == doctest::Approx(e0).epsilon(1e-10));
    // Swapping the pair runs the scheme backwards.
    std::swap(cur, prev);
    for (int n = 0; n < 200; ++n) {
        FeFunction next = leapfrog_step(cur, prev, nullptr, dt, params);
        prev = std::move(cur);
        cur = std::move(next);
    }
    for (std::size_t i = 0; i < s->num_dofs(); ++i) CHECK(cur[i] == doctest::Approx(first.u0[i]).epsilon(1e-8));
}

TEST_CASE("source term enters with dt^2") {
    const auto s = uniform_space(8);
    const LtsParams params(1, 0.0);
    const FeFunction zero(s);
    const FeFunction f = interpolate([](double) { return 3.0; }, s);
    const FeFunction next = leapfrog_step(zero, zero, &f, 0.1, params);
    for (std::size_t i = 0; i < s->num_dofs(); ++i) CHECK(next[i] == doctest::Approx(0.03));
    const FeFunction v = velocity(next, zero, 0.1);
    CHECK(v[3] == doctest::Approx(0.3));
}

TEST_CASE("energy across a mesh change is rejected") {
    const auto a = uniform_space(8);
    const auto b = uniform_space(16);
    CHECK_THROWS_AS(discrete_energy(FeFunction(a), FeFunction(b), 0.1, LtsParams(1, 0.0)), EnergyUndefinedError);
    CHECK_THROWS_AS(leapfrog_step(FeFunction(a), FeFunction(b), nullptr, 0.1, LtsParams(1, 0.0)),
                    SpaceMismatchError);
}
