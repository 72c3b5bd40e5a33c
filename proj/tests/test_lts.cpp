#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "waveadapt/lts.hpp"

using namespace waveadapt;

namespace {

// Local mesh used for the stability checks: 16 elements on (0,1), middle four bisected.
SpacePtr window_space() {
    auto f = std::make_shared<const Forest>(MacroMesh::uniform(0.0, 1.0, 16));
    MeshSnapshot m = MeshSnapshot::macro(f);
    m = refine(m, std::vector{m[6], m[7], m[8], m[9]}).mesh;
    return FeSpace::create(m, SpaceOptions{1.0 / 16.0, {}});
}

Eigen::MatrixXd dense_A(const FeSpace& s) {
    const auto n = static_cast<Eigen::Index>(s.num_dofs());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    const auto& op = s.op();
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, i) = op.stiff_diag[i] / op.lumped[i];
        if (i + 1 < n) {
            a(i, i + 1) = op.stiff_off[i] / op.lumped[i];
            a(i + 1, i) = op.stiff_off[i] / op.lumped[i + 1];
        }
    }
    return a;
}

// A P(dt^2 Π A) from the monomial coefficients of P, evaluated by Horner.
Eigen::MatrixXd dense_lts(const FeSpace& s, double dt, const LtsParams& params) {
    const int p = params.p();
    // Monomial coefficients by interpolating P at p+1 points.
    Eigen::MatrixXd v(p + 1, p + 1);
    Eigen::VectorXd y(p + 1);
    for (int i = 0; i <= p; ++i) {
        const double x = 0.5 * i;
        for (int j = 0; j <= p; ++j) v(i, j) = std::pow(x, j);
        y(i) = stability_poly(params, x);
    }
    const Eigen::VectorXd c = v.fullPivLu().solve(y);
    const Eigen::MatrixXd a = dense_A(s);
    const auto n = a.rows();
    Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i : s.fine_dofs()) pi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    const Eigen::MatrixXd b = dt * dt * pi * a;
    Eigen::MatrixXd poly = c(p) * Eigen::MatrixXd::Identity(n, n);
    for (int j = p - 1; j >= 0; --j) poly = poly * b + c(j) * Eigen::MatrixXd::Identity(n, n);
    return a * poly;
}

}  // namespace

TEST_CASE("Chebyshev polynomials") {
    CHECK(cheb_T(0, 0.3) == 1.0);
    CHECK(cheb_T(2, 0.3) == doctest::Approx(-0.82));
    CHECK(cheb_T(5, std::cos(0.7)) == doctest::Approx(std::cos(3.5)));
    CHECK(cheb_T_derivative(3, 0.4) == doctest::Approx(12.0 * 0.16 - 3.0));
    CHECK_THROWS_AS(cheb_T(-1, 0.0), std::invalid_argument);
}

TEST_CASE("stability polynomial") {
    const LtsParams p2(2);
    CHECK(p2.delta() == 1.0);
    CHECK(p2.omega() == doctest::Approx(8.0));
    CHECK(p2.tau() == 1.0);
    CHECK(stability_poly(p2, 0.0) == doctest::Approx(1.0));
    CHECK(stability_poly(p2, 8.0) == doctest::Approx(0.5));
    // Undamped: P_p(x) = 2 (1 - T_p(1 - x / (2 p^2))) / x.
    const LtsParams p5(5);
    for (double x : {0.3, 7.0, 40.0}) {
        CHECK(stability_poly(p5, x) == doctest::Approx(2.0 * (1.0 - cheb_T(5, 1.0 - x / 50.0)) / x));
    }
    const LtsParams damped(3, 0.05);
    CHECK(stability_poly(damped, 0.0) == doctest::Approx(1.0));
    CHECK(damped.delta() == doctest::Approx(1.0 + 0.05 / 9.0));
    CHECK_THROWS_AS(LtsParams(0), std::invalid_argument);
    CHECK_THROWS_AS(LtsParams(2, -1.0), std::invalid_argument);
}

TEST_CASE("apply_lts with p = 2 matches the closed form") {
    auto s = window_space();
    FeFunction u = interpolate([](double x) { return std::sin(3.0 * x) * x * (1.0 - x); }, s);
    const double dt = 0.05;
    FeFunction got = apply_lts(u, dt, LtsParams(2));
    FeFunction au = apply_A(u);
    FeFunction expect = apply_A(fine_interpolate(au));
    expect *= -dt * dt / 16.0;
    expect += au;
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("apply_lts against a dense matrix polynomial") {
    auto s = window_space();
    FeFunction u = interpolate([](double x) { return std::exp(-20.0 * (x - 0.45) * (x - 0.45)); }, s);
    Eigen::VectorXd uv = Eigen::Map<const Eigen::VectorXd>(u.coeffs().data(), static_cast<Eigen::Index>(u.size()));
    for (const LtsParams& params : {LtsParams(2), LtsParams(3), LtsParams(4, 0.01)}) {
        const double dt = 0.05;
        FeFunction got = apply_lts(u, dt, params);
        const Eigen::VectorXd expect = dense_lts(*s, dt, params) * uv;
        double scale = expect.cwiseAbs().maxCoeff();
        for (std::size_t i = 0; i < u.size(); ++i) {
            CHECK(std::abs(got[i] - expect(static_cast<Eigen::Index>(i))) < 1e-9 * scale);
        }
    }
}

TEST_CASE("apply_lts without fine dofs is apply_A") {
    auto f = std::make_shared<const Forest>(MacroMesh::uniform(0.0, 1.0, 8));
    auto s = FeSpace::create(MeshSnapshot::macro(f), SpaceOptions{0.125, {}});
    FeFunction u = interpolate([](double x) { return x * (1.0 - x); }, s);
    FeFunction a = apply_lts(u, 0.1, LtsParams(3));
    FeFunction b = apply_A(u);
    CHECK(a.coeffs() == b.coeffs());
}

TEST_CASE("maximum eigenvalue and leapfrog limit on a uniform mesh") {
    auto f = std::make_shared<const Forest>(MacroMesh::uniform(0.0, 1.0, 64));
    auto s = FeSpace::create(MeshSnapshot::macro(f), SpaceOptions{});
    const double h = 1.0 / 64.0;
    const double lambda = max_eigenvalue(*s);
    // Lumped P1 on a uniform mesh: (4/h^2) sin^2(pi (n-1) / (2n)).
    CHECK(lambda == doctest::Approx(4.0 / (h * h) * std::pow(std::sin(M_PI * 63.0 / 128.0), 2)).epsilon(1e-8));
    CHECK(max_stable_dt(s, LtsParams(1)) == doctest::Approx(h).epsilon(1e-3));
}

TEST_CASE("amplification radius agrees with the nonsymmetric block matrix") {
    auto s = window_space();
    const auto n = static_cast<Eigen::Index>(s->num_dofs());
    for (int p : {1, 2, 3}) {
        for (double dt : {0.03, 0.0628, 0.07}) {
            const LtsParams params(p);
            const Eigen::MatrixXd at = p == 1 ? dense_A(*s) : dense_lts(*s, dt, params);
            Eigen::MatrixXd block = Eigen::MatrixXd::Zero(2 * n, 2 * n);
            block.topLeftCorner(n, n) = 2.0 * Eigen::MatrixXd::Identity(n, n) - dt * dt * at;
            block.topRightCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);
            block.bottomLeftCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
            Eigen::EigenSolver<Eigen::MatrixXd> es(block, false);
            const double dense = es.eigenvalues().cwiseAbs().maxCoeff();
            // Double eigenvalues on the unit circle are defective; tolerate their perturbation.
            CHECK(amplification_radius(s, dt, params) == doctest::Approx(dense).epsilon(1e-5));
        }
    }
}

TEST_CASE("local time stepping restores the coarse step") {
    auto s = window_space();
    const double dt = 0.0628;
    CHECK(amplification_radius(s, dt, LtsParams(1)) > 2.0);
    CHECK(amplification_radius(s, dt, LtsParams(2)) <= 1.0 + 1e-10);
    CHECK(lts_ratio(*s, 8) == 2);
    CHECK(lts_ratio(*s, 1) == 1);
}

TEST_CASE("stable step of a two-level mesh relative to the coarse mesh") {
    auto f = std::make_shared<const Forest>(MacroMesh::uniform(0.0, 1.0, 16));
    MeshSnapshot m = MeshSnapshot::macro(f);
    const double coarse = max_stable_dt(FeSpace::create(m, SpaceOptions{1.0 / 16.0, {}}), LtsParams(1));
    m = refine(m, std::vector{m[0], m[1], m[2], m[3]}).mesh;
    auto s = FeSpace::create(m, SpaceOptions{1.0 / 16.0, {}});
    const double lf = max_stable_dt(s, LtsParams(1));
    CHECK(lf < 0.6 * coarse);
    CHECK(lf > 0.45 * coarse);
    // Undamped LTS loses stability in narrow pockets well below the coarse limit; damping closes them.
    CHECK(max_stable_dt(s, LtsParams(2, 0.01)) >= 0.9 * coarse);
    CHECK(max_stable_dt(s, LtsParams(2)) > 1.4 * lf);
}
