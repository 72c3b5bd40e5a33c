#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "waveadapt/estimator.hpp"

using namespace waveadapt;

namespace {

SpacePtr space_on(const MeshSnapshot& m, double h_ref) { return FeSpace::create(m, SpaceOptions{h_ref, {}}); }

double sine(double x) { return std::sin(std::numbers::pi * x); }

// Norms of y minus its sibling-merged interpolant, restricted to element e.
std::pair<double, double> merge_defect_norms(const FeFunction& y, std::size_t e) {
    const SpacePtr& s = y.space();
    const MeshSnapshot& m = s->mesh();
    const std::size_t left = m[e].index % 2 == 0 ? e : e - 1;
    const auto c = coarsen(m, std::vector{m[left], m[left + 1]});
    REQUIRE(c.coarsened.size() == 1);
    const SpacePtr coarse = space_on(c.mesh, s->options().h_ref);
    const FeFunction back = transfer(transfer(y, coarse), s);
    const FeFunction d = y - back;
    const double a = d.nodal(e);
    const double b = d.nodal(e + 1);
    const double h = s->h(e);
    const double energy = std::sqrt(s->c2(e) * (b - a) * (b - a) / h);
    const double l2 = std::sqrt(h / 3.0 * (a * a + a * b + b * b));
    return {energy, l2};
}

}  // namespace

TEST_CASE("time shapes") {
    CHECK(TimeShapes::bubble(0.5, 0.5, 0.2) == doctest::Approx(0.125));
    CHECK(TimeShapes::bubble(0.6, 0.5, 0.2) == doctest::Approx(0.0));
    CHECK(TimeShapes::hat(0.5, 0.5, 0.2) == doctest::Approx(1.0));
    CHECK(TimeShapes::hat(0.6, 0.5, 0.2) == doctest::Approx(0.5));
    CHECK(TimeShapes::hat(0.8, 0.5, 0.2) == 0.0);
}

TEST_CASE("zeta quadrature is exact for quintics") {
    CHECK(zeta_half([](double t) { return t * t * t * t * t; }, 0.0, 2.0) == doctest::Approx(64.0 / 6.0));
}

TEST_CASE("beta on the hat example") {
    auto f = std::make_shared<const Forest>(MacroMesh::uniform(0.0, 2.0, 2));
    MeshSnapshot m = MeshSnapshot::macro(f);
    m = refine(m, std::vector{m[0]}).mesh;  // [0, .5], [.5, 1], [1, 2]
    const auto s = space_on(m, 1.0);
    FeFunction y(s);
    y[0] = 1.0;  // node 0.5
    const auto beta = coarsening_preindicators(y);
    CHECK(beta.beta1[0] == doctest::Approx(std::sqrt(1.0 / 6.0)));
    CHECK(beta.beta0[0] == doctest::Approx(std::sqrt(2.0)));
    CHECK(beta.beta0[1] == doctest::Approx(std::sqrt(2.0)));
    CHECK(std::isinf(beta.beta0[2]));
}

TEST_CASE("beta closed form equals the defect norms") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    std::uniform_int_distribution<int> pick(0, 7);
    auto f = std::make_shared<const Forest>(MacroMesh(std::vector{0.0, 0.3, 0.7, 1.2, 2.0, 2.1, 3.0, 3.5, 4.0}));
    for (int trial = 0; trial < 200; ++trial) {
        MeshSnapshot m = MeshSnapshot::macro(f);
        for (int r = 0; r < 3; ++r) {
            m = refine(m, std::vector{m[static_cast<std::size_t>(pick(rng)) % m.size()]}).mesh;
        }
        const auto s = space_on(m, 0.5);
        FeFunction y(s);
        for (auto& c : y.coeffs()) c = val(rng);
        const auto beta = coarsening_preindicators(y);
        for (std::size_t e = 0; e < s->num_elements(); ++e) {
            if (std::isinf(beta.beta0[e])) continue;
            const auto [energy, l2] = merge_defect_norms(y, e);
            CHECK(beta.beta0[e] == doctest::Approx(energy).epsilon(1e-12));
            CHECK(beta.beta1[e] == doctest::Approx(l2).epsilon(1e-12));
        }
    }
}

TEST_CASE("mesh-change indicators vanish without coarsening") {
    auto f = std::make_shared<const Forest>(MacroMesh::uniform(0.0, 1.0, 8));
    const MeshSnapshot m = MeshSnapshot::macro(f);
    const auto vn = space_on(m, 1.0 / 8.0);
    const auto finer = space_on(refine(m, std::vector{m[2], m[3]}).mesh, 1.0 / 8.0);
    const FeFunction u = interpolate(sine, vn);
    const FeFunction v = interpolate([](double x) { return x * (1.0 - x); }, vn);
    const FeFunction au = apply_lts(u, 0.05, LtsParams(1, 0.0));
    for (const auto& next : {vn, finer}) {
        const auto mu = mesh_change_indicators(u, v, au, next, 0.05, TransferMode::interpolation);
        CHECK(mu.mu0 == 0.0);
        CHECK(mu.mu1 == 0.0);
        CHECK(mu.mu2 == 0.0);
    }
    const auto coarser = space_on(coarsen(finer->mesh(), std::vector{finer->mesh()[2], finer->mesh()[3]}).mesh, 1.0 / 8.0);
    const auto fine_v = interpolate([](double x) { return x * x * (1.0 - x); }, finer);
    const auto fine_au = apply_lts(interpolate(sine, finer), 0.05, LtsParams(2, 0.0));
    const auto mu = mesh_change_indicators(fine_v, fine_v, fine_au, coarser, 0.05, TransferMode::interpolation);
    CHECK(mu.mu1 > 0.0);
    CHECK(mu.mu2 > 0.0);
}

TEST_CASE("alpha0 equals the closed-form LTS defect for p = 2") {
    auto f = std::make_shared<const Forest>(MacroMesh::uniform(0.0, 1.0, 16));
    MeshSnapshot m = MeshSnapshot::macro(f);
    m = refine(m, std::vector{m[5], m[6], m[7]}).mesh;
    const auto s = space_on(m, 1.0 / 16.0);
    const double dt = 0.03;
    const FeFunction u = interpolate(sine, s);
    const FeFunction au = apply_A(u);
    const auto ind = lts_indicators(au, apply_lts(u, dt, LtsParams(2, 0.0)), s, 0.0);
    FeFunction defect = apply_A(fine_interpolate(au));
    defect *= dt * dt / 16.0;
    CHECK(ind.alpha0 == doctest::Approx(l2_norm(defect)).epsilon(1e-10));
    CHECK(ind.alpha == doctest::Approx(ind.alpha0 + ind.alpha1));
}

TEST_CASE("elliptic estimator decays like h in the energy norm") {
    auto f = std::make_shared<const Forest>(MacroMesh::uniform(0.0, 1.0, 4));
    double prev = 0.0;
    for (std::uint32_t level = 2; level <= 5; ++level) {
        const auto s = space_on(MeshSnapshot::uniform(f, level), 0.25);
        const double eta = elliptic_estimator(interpolate(sine, s), s, Norm::energy).total;
        if (prev > 0.0) CHECK(prev / eta == doctest::Approx(2.0).epsilon(0.05));
        prev = eta;
    }
    const auto s = space_on(MeshSnapshot::macro(f), 0.25);
    CHECK(elliptic_estimator(FeFunction(s), s, Norm::l2).total == 0.0);
}

TEST_CASE("time indicators need two steps of history") {
    auto f = std::make_shared<const Forest>(MacroMesh::uniform(0.0, 1.0, 4));
    const auto s = space_on(MeshSnapshot::macro(f), 0.25);
    const FeFunction z(s);
    const TimeHistory h{&z, &z, nullptr, &z, &z, &z, nullptr};
    const auto d = prepare_time_indicators(h, 0.0, 0.1);
    CHECK_FALSE(d.available);
    CHECK(d.theta0(0.05) == 0.0);
}

TEST_CASE("time indicators vanish for a linear-in-time velocity history") {
    auto f = std::make_shared<const Forest>(MacroMesh::uniform(0.0, 1.0, 8));
    const auto s = space_on(MeshSnapshot::macro(f), 0.125);
    const FeFunction w = interpolate(sine, s);
    // Constant velocity and constant A U: all second differences are zero.
    const TimeHistory h{&w, &w, &w, &w, &w, &w, &w};
    const auto d = prepare_time_indicators(h, 0.2, 0.1);
    REQUIRE(d.available);
    for (double t : {0.21, 0.25, 0.27}) CHECK(d.theta0(t) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("bound accumulation and CSV layout") {
    BoundAccumulator acc(0.5);
    IndicatorRecord a;
    a.eps0 = 0.2;
    a.eps1 = 0.1;
    a.zeta = {0.01, 0.02};
    acc.add(a);
    IndicatorRecord b;
    b.eps0 = 0.1;
    b.eps1 = 0.3;
    b.zeta = {0.03, 0.04};
    acc.add(b);
    CHECK(b.bound_energy == doctest::Approx(0.5 + 2 * 0.1 + 0.2));
    CHECK(b.bound_l2 == doctest::Approx(0.5 + 2 * 0.1 + 0.3));
    std::ostringstream os;
    write_indicator_header(os);
    CHECK(os.str().rfind("n,t,eps0,eps1,mu0,mu1,mu2,alpha0,alpha1,alpha,zeta_half1,zeta_half2,delta_mean,", 0) == 0);
}
