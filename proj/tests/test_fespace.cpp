#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "waveadapt/fespace.hpp"

using namespace waveadapt;

namespace {

ForestPtr unit_forest() { return std::make_shared<const Forest>(MacroMesh::uniform(0.0, 1.0, 1)); }

SpacePtr uniform_space(const ForestPtr& f, unsigned level, double h_ref = 0.0) {
    return FeSpace::create(MeshSnapshot::uniform(f, level), SpaceOptions{h_ref, {}});
}

}  // namespace

TEST_CASE("transfer of a single hat to a refined mesh") {
    auto f = unit_forest();
    auto coarse = uniform_space(f, 1);
    auto fine = uniform_space(f, 2);
    FeFunction u(coarse, {1.0});
    FeFunction w = transfer(u, fine);
    REQUIRE(w.size() == 3);
    CHECK(w[0] == doctest::Approx(0.5));
    CHECK(w[1] == doctest::Approx(1.0));
    CHECK(w[2] == doctest::Approx(0.5));

    // Coarsening by interpolation keeps shared nodal values.
    FeFunction back = transfer(w, coarse);
    CHECK(back[0] == doctest::Approx(1.0));
}

TEST_CASE("apply_A of a single hat") {
    auto f = unit_forest();
    auto s = uniform_space(f, 1);
    FeFunction u(s, {1.0});
    FeFunction au = apply_A(u);
    // K_ii = 2/h, lumped mass h -> 2/h^2 with h = 1/2.
    CHECK(au[0] == doctest::Approx(8.0));
}

TEST_CASE("norms of sin(pi x)") {
    auto f = unit_forest();
    auto s = uniform_space(f, 7);
    const double pi = std::numbers::pi;
    FeFunction u = interpolate([&](double x) { return std::sin(pi * x); }, s);
    CHECK(energy_norm(u) == doctest::Approx(pi / std::sqrt(2.0)).epsilon(1e-3));
    CHECK(l2_norm(u) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-3));
    CHECK(l2_error(u, [&](double x) { return std::sin(pi * x); }) < 1e-4);
    CHECK(energy_error(u, [&](double x) { return pi * std::cos(pi * x); }) < 2e-2);
}

TEST_CASE("interpolate rejects non-finite data") {
    auto s = uniform_space(unit_forest(), 2);
    CHECK_THROWS_AS(interpolate([](double) { return std::nan(""); }, s), DataError);
}

TEST_CASE("same-space algebra refuses mismatched spaces") {
    auto f = unit_forest();
    FeFunction a(uniform_space(f, 1), {1.0});
    FeFunction b(uniform_space(f, 2), {1.0, 1.0, 1.0});
    CHECK_THROWS_AS(a += b, SpaceMismatchError);
    FeFunction d = difference(b, a);
    CHECK(d.space()->num_dofs() == 3);
    CHECK(d[0] == doctest::Approx(0.5));
    CHECK(d[1] == doctest::Approx(0.0));
    CHECK(d[2] == doctest::Approx(0.5));
}

TEST_CASE("mixed inner products agree with evaluation on the common refinement") {
    auto f = std::make_shared<const Forest>(MacroMesh::uniform(0.0, 2.0, 2));
    MeshSnapshot m0 = MeshSnapshot::uniform(f, 2);
    MeshSnapshot m1 = refine(m0, std::vector{m0[0], m0[5]}).mesh;
    MeshSnapshot m2 = refine(MeshSnapshot::uniform(f, 1), std::vector<ElementKey>{ElementKey{1, 1, 0}}).mesh;
    auto s1 = FeSpace::create(m1, {});
    auto s2 = FeSpace::create(m2, {});
    FeFunction u = interpolate([](double x) { return std::sin(x) * x * (2.0 - x); }, s1);
    FeFunction w = interpolate([](double x) { return std::exp(x) * x * (2.0 - x); }, s2);
    auto joint = sum_space(s1, s2);
    FeFunction uj = transfer(u, joint);
    FeFunction wj = transfer(w, joint);
    CHECK(l2_inner(u, w) == doctest::Approx(l2_inner(uj, wj)).epsilon(1e-13));
    CHECK(energy_inner(u, w) == doctest::Approx(energy_inner(uj, wj)).epsilon(1e-13));
}

TEST_CASE("L2 projection is mass orthogonal") {
    auto f = std::make_shared<const Forest>(MacroMesh::uniform(0.0, 1.0, 2));
    auto fine = uniform_space(f, 4);
    auto coarse = uniform_space(f, 2);
    FeFunction u = interpolate([](double x) { return std::sin(7.0 * x) * x * (1.0 - x); }, fine);
    FeFunction pu = l2_project(u, coarse);
    FeFunction r = difference(u, pu);
    for (std::size_t i = 0; i < coarse->num_dofs(); ++i) {
        FeFunction phi(coarse);
        phi[i] = 1.0;
        CHECK(std::abs(l2_inner(r, phi)) < 1e-14);
    }
    // Projection onto a finer space is the identity.
    FeFunction up = l2_project(pu, fine);
    CHECK(l2_norm(difference(up, pu)) < 1e-14);
}

TEST_CASE("apply_A_mixed matches apply_A on the same space") {
    auto f = unit_forest();
    auto s = uniform_space(f, 3);
    FeFunction u = interpolate([](double x) { return x * x * (1.0 - x); }, s);
    FeFunction a = apply_A(u);
    FeFunction b = apply_A_mixed(u, s);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]));
}

TEST_CASE("fine classification") {
    auto f = std::make_shared<const Forest>(MacroMesh::uniform(0.0, 1.0, 4));
    MeshSnapshot m = MeshSnapshot::macro(f);
    m = refine(m, std::vector{m[1]}).mesh;  // [0.25,0.375],[0.375,0.5]
    auto s = FeSpace::create(m, SpaceOptions{0.25, {}});
    CHECK_FALSE(s->element_is_fine(0));
    CHECK(s->element_is_fine(1));
    CHECK(s->element_is_fine(2));
    CHECK_FALSE(s->element_is_fine(3));
    // Dofs at 0.25, 0.375, 0.5 touch a fine element.
    CHECK(s->fine_dofs() == std::vector<std::size_t>{0, 1, 2});
    CHECK(s->num_coarse_dofs() == 1);
    FeFunction u = interpolate([](double) { return 1.0; }, s);
    FeFunction fu = fine_interpolate(u);
    CHECK(fu[3] == 0.0);
    CHECK(fu[1] == 1.0);
}

TEST_CASE("function CSV") {
    auto s = uniform_space(unit_forest(), 1);
    FeFunction u(s, {2.0});
    std::ostringstream os;
    write_function_csv(os, u);
    CHECK(os.str() == "x,value\n0,0\n0.5,2\n1,0\n");
}
