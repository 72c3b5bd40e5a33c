// Acceptance suite: one PASS/FAIL line per criterion; nonzero exit if any criterion fails.
#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "waveadapt/harness.hpp"

using namespace waveadapt;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
    if (!ok) ++failures;
    std::printf("[%s] %2d %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

void guarded(int id, const char* name, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(id, name, false, std::string("exception: ") + e.what());
    }
}

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

Vector to_eigen(const FeFunction& u) { return Eigen::Map<const Vector>(u.coeffs().data(), static_cast<Eigen::Index>(u.size())); }

// Dense matrix of a linear map on the dofs of `s`, built column by column.
Matrix dense_of(const SpacePtr& s, const std::function<FeFunction(const FeFunction&)>& op) {
    const auto n = static_cast<Eigen::Index>(s->num_dofs());
    Matrix m(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        FeFunction e(s);
        e[static_cast<std::size_t>(j)] = 1.0;
        m.col(j) = to_eigen(op(e));
    }
    return m;
}

// A = M_lumped^{-1} K from the assembled tridiagonal entries.
Matrix dense_A(const FeSpace& s) {
    const auto n = static_cast<Eigen::Index>(s.num_dofs());
    Matrix a = Matrix::Zero(n, n);
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

Matrix fine_projector(const FeSpace& s) {
    const auto n = static_cast<Eigen::Index>(s.num_dofs());
    Matrix pi = Matrix::Zero(n, n);
    for (std::size_t i : s.fine_dofs()) pi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    return pi;
}

// Monomial coefficients of P(x) = 2 (tau_p - T_p(delta - x/omega)) / (x tau_p), by exact
// polynomial arithmetic on the Chebyshev three-term relation.
std::vector<double> closed_form_coefficients(int p, double nu) {
    const double delta = 1.0 + nu / (p * p);
    std::vector<double> t_prev{1.0};
    std::vector<double> t_cur{delta};
    auto derivative_at_delta = [&] {
        // T_p'(delta) via U_{p-1}(delta)
        double u_prev = 1.0, u_cur = 2.0 * delta;
        if (p == 1) return 1.0;
        for (int k = 2; k < p; ++k) {
            const double u_next = 2.0 * delta * u_cur - u_prev;
            u_prev = u_cur;
            u_cur = u_next;
        }
        return p * u_cur;
    };
    double tau_prev = 1.0, tau = delta;
    for (int k = 2; k <= p; ++k) {
        const double next = 2.0 * delta * tau - tau_prev;
        tau_prev = tau;
        tau = next;
    }
    const double omega = 2.0 * derivative_at_delta() / tau;
    // T_1(q(x)) with q(x) = delta - x / omega
    t_cur = {delta, -1.0 / omega};
    for (int k = 2; k <= p; ++k) {
        std::vector<double> next(static_cast<std::size_t>(k) + 1, 0.0);
        for (std::size_t j = 0; j < t_cur.size(); ++j) {
            next[j] += 2.0 * delta * t_cur[j];
            next[j + 1] += -2.0 / omega * t_cur[j];
        }
        for (std::size_t j = 0; j < t_prev.size(); ++j) next[j] -= t_prev[j];
        t_prev = std::move(t_cur);
        t_cur = std::move(next);
    }
    std::vector<double> c(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) c[static_cast<std::size_t>(j)] = -2.0 * t_cur[static_cast<std::size_t>(j) + 1] / tau;
    return c;
}

Matrix dense_lts_oracle(const FeSpace& s, double dt, int p, double nu) {
    const auto c = closed_form_coefficients(p, nu);
    const Matrix a = dense_A(s);
    const Matrix b = dt * dt * fine_projector(s) * a;
    const auto n = a.rows();
    Matrix poly = c.back() * Matrix::Identity(n, n);
    for (int j = p - 2; j >= 0; --j) poly = poly * b + c[static_cast<std::size_t>(j)] * Matrix::Identity(n, n);
    return a * poly;
}

double block_radius(const Matrix& lts_a, double dt) {
    const auto n = lts_a.rows();
    Matrix block = Matrix::Zero(2 * n, 2 * n);
    block.topLeftCorner(n, n) = 2.0 * Matrix::Identity(n, n) - dt * dt * lts_a;
    block.topRightCorner(n, n) = -Matrix::Identity(n, n);
    block.bottomLeftCorner(n, n) = Matrix::Identity(n, n);
    Eigen::EigenSolver<Matrix> es(block, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

SpacePtr random_space(std::mt19937& rng, std::size_t macro_elements, int refinements, double h_ref = -1.0) {
    std::uniform_real_distribution<double> w(0.5, 1.5);
    std::vector<double> pts{0.0};
    for (std::size_t i = 0; i < macro_elements; ++i) pts.push_back(pts.back() + w(rng));
    auto f = std::make_shared<const Forest>(MacroMesh(pts));
    MeshSnapshot m = MeshSnapshot::macro(f);
    for (int r = 0; r < refinements; ++r) {
        std::uniform_int_distribution<std::size_t> pick(0, m.size() - 1);
        m = refine(m, std::vector{m[pick(rng)]}).mesh;
    }
    return FeSpace::create(m, SpaceOptions{h_ref > 0.0 ? h_ref : 0.5, {}});
}

FeFunction random_function(std::mt19937& rng, const SpacePtr& s) {
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    FeFunction u(s);
    for (auto& c : u.coeffs()) c = val(rng);
    return u;
}

SpacePtr two_level(std::mt19937& rng, std::size_t n, int level) {
    auto f = std::make_shared<const Forest>(MacroMesh::uniform(0.0, 1.0, n));
    const MeshSnapshot macro = MeshSnapshot::macro(f);
    std::bernoulli_distribution coin(0.4);
    std::vector<ElementKey> active;
    for (std::size_t i = 0; i < macro.size(); ++i) {
        if (coin(rng) || i == n / 2) {
            const std::uint64_t k = std::uint64_t{1} << level;
            for (std::uint64_t j = 0; j < k; ++j) active.push_back({macro[i].macro, static_cast<std::uint32_t>(level), j});
        } else {
            active.push_back(macro[i]);
        }
    }
    return FeSpace::create(MeshSnapshot(f, active), SpaceOptions{1.0 / static_cast<double>(n), {}});
}

// Norms on element e of y minus its interpolant on the sibling-merged mesh.
std::pair<double, double> merge_defect_norms(const FeFunction& y, std::size_t e) {
    const SpacePtr& s = y.space();
    const MeshSnapshot& m = s->mesh();
    const std::size_t left = m[e].index % 2 == 0 ? e : e - 1;
    const auto c = coarsen(m, std::vector{m[left], m[left + 1]});
    const SpacePtr coarse = FeSpace::create(c.mesh, s->options());
    const FeFunction d = y - transfer(transfer(y, coarse), s);
    const double a = d.nodal(e);
    const double b = d.nodal(e + 1);
    const double h = s->h(e);
    return {std::sqrt(s->c2(e) * (b - a) * (b - a) / h), std::sqrt(h / 3.0 * (a * a + a * b + b * b))};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
    std::mt19937 rng(20240611);

    guarded(1, "convergence rates", [&] {
        const auto t0 = std::chrono::steady_clock::now();
        SolverConfig c = SolverConfig::defaults(Experiment::forced);
        c.out_dir = (out / "convergence").string();
        const auto table = convergence_study(c, {0.4, 0.2, 0.1, 0.05});
        write_convergence_csv(out / "convergence" / "convergence.csv", table);
        const double secs = seconds_since(t0);
        const bool ok = table.energy_slope >= 0.85 && table.energy_slope <= 1.3 && table.velocity_slope >= 1.7 &&
                        table.velocity_slope <= 2.4 && secs < 60.0;
        report(1, "convergence rates", ok,
               fmt("energy slope %.3f in [0.85, 1.3], velocity slope %.3f in [1.7, 2.4], %.2f s", table.energy_slope,
                   table.velocity_slope, secs));
        report(2, "estimator rate", table.bound_energy_slope >= 0.8,
               fmt("bound slope %.3f >= 0.8 (L2-form bound slope %.3f)", table.bound_energy_slope,
                   table.bound_l2_slope));
    });

    guarded(3, "LTS operator identity", [&] {
        double worst2 = 0.0;
        double worst1 = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            const auto s = two_level(rng, 24, 1);
            const FeFunction u = random_function(rng, s);
            const double dt = 0.8 / 24.0;
            const FeFunction au = apply_A(u);
            FeFunction expect = au;
            expect.axpy(-dt * dt / 16.0, apply_A(fine_interpolate(au)));
            const Vector diff = to_eigen(apply_lts(u, dt, LtsParams(2, 0.0))) - to_eigen(expect);
            worst2 = std::max(worst2, diff.norm() / to_eigen(expect).norm());
            const Vector d1 = to_eigen(apply_lts(u, dt, LtsParams(1, 0.0))) - to_eigen(au);
            worst1 = std::max(worst1, d1.cwiseAbs().maxCoeff());
        }
        report(3, "LTS operator identity", worst2 <= 1e-12 && worst1 == 0.0,
               fmt("p=2 max relative deviation %.2e <= 1e-12, p=1 max deviation %.1e == 0", worst2, worst1));
    });

    guarded(4, "Chebyshev recursion vs closed form", [&] {
        double worst = 0.0;
        for (int p = 1; p <= 8; ++p) {
            for (double nu : {0.0, 0.01}) {
                const auto s = two_level(rng, 16, 3);
                const double dt = 0.9 / 16.0;
                const Matrix oracle = dense_lts_oracle(*s, dt, p, nu);
                const LtsParams params(p, nu);
                for (int k = 0; k < 20; ++k) {
                    const FeFunction u = random_function(rng, s);
                    const Vector expect = oracle * to_eigen(u);
                    const Vector got = to_eigen(apply_lts(u, dt, params));
                    worst = std::max(worst, (got - expect).norm() / expect.norm());
                }
            }
        }
        report(4, "Chebyshev recursion vs closed form", worst <= 1e-11,
               fmt("max relative deviation %.2e <= 1e-11 over p=1..8, nu in {0, 0.01}, 20 vectors", worst));
    });

    guarded(5, "energy conservation", [&] {
        auto f = std::make_shared<const Forest>(MacroMesh::uniform(0.0, 1.0, 100));
        const auto s = FeSpace::create(MeshSnapshot::macro(f), SpaceOptions{0.01, {}});
        const LtsParams params(1, 0.0);
        const double dt = 0.9 * max_stable_dt(s, params);
        auto first = init_first_steps([](double x) { return std::sin(std::numbers::pi * x) + 0.3 * std::sin(7.0 * std::numbers::pi * x); },
                                      [](double x) { return x * (1.0 - x); }, s, dt, nullptr, params);
        FeFunction prev = first.u0;
        FeFunction cur = first.u1;
        const double e0 = discrete_energy(cur, prev, dt, params);
        double drift = 0.0;
        for (int n = 0; n < 1000; ++n) {
            FeFunction next = leapfrog_step(cur, prev, nullptr, dt, params);
            drift = std::max(drift, std::abs(discrete_energy(next, cur, dt, params) - e0) / e0);
            prev = std::move(cur);
            cur = std::move(next);
        }
        report(5, "energy conservation", drift <= 1e-9, fmt("max relative drift %.2e <= 1e-9 over 1000 steps", drift));
    });

    guarded(6, "CFL liberation", [&] {
        auto f = std::make_shared<const Forest>(MacroMesh::uniform(0.0, 1.0, 16));
        const MeshSnapshot coarse = MeshSnapshot::macro(f);
        const auto coarse_space = FeSpace::create(coarse, SpaceOptions{1.0 / 16.0, {}});
        const double dt = max_stable_dt(coarse_space, LtsParams(1, 0.0));
        const auto s = FeSpace::create(refine(coarse, std::vector{coarse[6], coarse[7], coarse[8], coarse[9]}).mesh,
                                       SpaceOptions{1.0 / 16.0, {}});
        const double r1 = block_radius(dense_of(s, [](const FeFunction& u) { return apply_A(u); }), dt);
        const double r2 = block_radius(
            dense_of(s, [&](const FeFunction& u) { return apply_lts(u, dt, LtsParams(2, 0.0)); }), dt);
        report(6, "CFL liberation", r1 > 1.0 + 1e-6 && r2 <= 1.0 + 1e-10,
               fmt("dt %.6f: radius p=1 %.6f > 1+1e-6, p=2 1%+.1e <= 1+1e-10", dt, r1, r2 - 1.0));
    });

    guarded(7, "transfer and mesh-change correctness", [&] {
        double point_err = 0.0;
        double mu_max = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            const auto s = random_space(rng, 8, 6);
            const FeFunction y = random_function(rng, s);
            MeshSnapshot m = s->mesh();
            std::uniform_int_distribution<std::size_t> pick(0, m.size() - 1);
            const auto fine = FeSpace::create(refine(m, std::vector{m[pick(rng)], m[pick(rng)]}).mesh, s->options());
            std::uniform_real_distribution<double> xs(m.forest()->macro().a(), m.forest()->macro().b());
            for (auto mode : {TransferMode::interpolation, TransferMode::l2_projection}) {
                const FeFunction z = transfer(y, fine, mode);
                for (int k = 0; k < 100; ++k) {
                    const double x = xs(rng);
                    point_err = std::max(point_err, std::abs(z(x) - y(x)));
                }
            }
            const FeFunction v = random_function(rng, s);
            const FeFunction lts_au = apply_lts(y, 0.05, LtsParams(2, 0.0));
            for (const auto& next : {s, fine}) {
                const auto mu = mesh_change_indicators(y, v, lts_au, next, 0.05, TransferMode::interpolation);
                mu_max = std::max({mu_max, mu.mu0, mu.mu1, mu.mu2});
            }
        }
        double beta_err = 0.0;
        int configs = 0;
        while (configs < 1000) {
            const auto s = random_space(rng, 6, 4);
            const FeFunction y = random_function(rng, s);
            const auto beta = coarsening_preindicators(y);
            bool any = false;
            for (std::size_t e = 0; e < s->num_elements(); ++e) {
                if (std::isinf(beta.beta0[e])) continue;
                any = true;
                const auto [energy, l2] = merge_defect_norms(y, e);
                beta_err = std::max(beta_err, std::abs(beta.beta0[e] - energy) / std::max(energy, 1e-300));
                beta_err = std::max(beta_err, std::abs(beta.beta1[e] - l2) / std::max(l2, 1e-300));
            }
            if (any) ++configs;
        }
        report(7, "transfer and mesh-change correctness", point_err <= 1e-14 && mu_max == 0.0 && beta_err <= 1e-12,
               fmt("pointwise %.1e <= 1e-14, max mu %.1e == 0, beta relative %.1e <= 1e-12 (%d configs)", point_err,
                   mu_max, beta_err, configs));
    });

    RunReport traveling;
    bool traveling_ok = false;
    guarded(8, "adaptive tracking", [&] {
        SolverConfig c = SolverConfig::defaults(Experiment::traveling);
        c.out_dir = (out / "traveling").string();
        try {
            traveling = run_experiment(c);
            traveling_ok = true;
        } catch (const ToleranceUnreachableError& e) {
            report(8, "adaptive tracking", false, std::string("tolerance unreachable: ") + e.what());
            return;
        }
        double worst = 0.0;
        for (const auto& s : traveling.steps) {
            const double dev = std::abs(s.fine_centroid - (1.0 + s.t));
            worst = std::isnan(dev) ? std::numeric_limits<double>::infinity() : std::max(worst, dev);
        }
        report(8, "adaptive tracking", worst <= 0.5,
               fmt("max centroid deviation %.3f <= 0.5 over %zu levels; all %d steps accepted", worst,
                   traveling.steps.size(), traveling.N));
    });

    RunReport splitting;
    bool splitting_ok = false;
    try {
        SolverConfig c = SolverConfig::defaults(Experiment::splitting);
        c.out_dir = (out / "splitting").string();
        splitting = run_experiment(c);
        splitting_ok = true;
    } catch (const std::exception& e) {
        std::printf("splitting run failed: %s\n", e.what());
    }

    guarded(9, "efficiency ratios", [&] {
        if (!traveling_ok || !splitting_ok) {
            report(9, "efficiency ratios", false, "an adaptive run did not complete");
            return;
        }
        const bool ok = traveling.memory_ratio <= 0.10 && traveling.work_ratio <= 0.05 &&
                        splitting.memory_ratio <= 0.12 && splitting.work_ratio <= 0.06 && traveling.seconds < 120.0 &&
                        splitting.seconds < 120.0;
        report(9, "efficiency ratios", ok,
               fmt("traveling memory %.4f <= 0.10, work %.4f <= 0.05 (%.1f s); splitting memory %.4f <= 0.12, "
                   "work %.4f <= 0.06 (%.1f s)",
                   traveling.memory_ratio, traveling.work_ratio, traveling.seconds, splitting.memory_ratio,
                   splitting.work_ratio, splitting.seconds));
    });

    guarded(10, "splitting topology", [&] {
        if (!splitting_ok) {
            report(10, "splitting topology", false, "splitting run did not complete");
            return;
        }
        const double h_c = splitting.config.h_c;
        int bad_count = 0;
        int bad_symmetry = 0;
        int checked = 0;
        double worst_asym = 0.0;
        for (const auto& s : splitting.steps) {
            if (s.t <= 1.0) continue;
            ++checked;
            if (s.fine_regions.size() != 2) {
                ++bad_count;
                continue;
            }
            const auto& l = s.fine_regions[0];
            const auto& r = s.fine_regions[1];
            const double asym = std::max(std::abs((2.0 - l.right) - r.left), std::abs((2.0 - l.left) - r.right));
            worst_asym = std::max(worst_asym, asym);
            if (asym > h_c + 1e-12) ++bad_symmetry;
        }
        report(10, "splitting topology", checked > 0 && bad_count == 0 && bad_symmetry == 0,
               fmt("%d levels with t > 1: %d without exactly two regions; of the other %d, %d asymmetric (worst %.3f vs h_c %.2f)",
                   checked, bad_count, checked - bad_count, bad_symmetry, worst_asym, h_c));
    });

    guarded(11, "Dörfler properties", [&] {
        std::uniform_real_distribution<double> val(0.0, 1.0);
        std::uniform_int_distribution<int> len(1, 200);
        int bad = 0;
        for (int trial = 0; trial < 1000; ++trial) {
            std::vector<double> eta(static_cast<std::size_t>(len(rng)));
            for (auto& e : eta) e = trial % 3 == 0 ? std::floor(4.0 * val(rng)) : val(rng);
            const double theta = 0.01 + 0.98 * val(rng);
            const auto set = dorfler_mark(eta, theta);
            std::vector<double> sq(eta.size());
            for (std::size_t i = 0; i < eta.size(); ++i) sq[i] = eta[i] * eta[i];
            const double total = std::accumulate(sq.begin(), sq.end(), 0.0);
            double got = 0.0;
            for (auto i : set) got += sq[i];
            std::sort(sq.begin(), sq.end(), std::greater<>());
            const double smaller =
                set.empty() ? -1.0 : std::accumulate(sq.begin(), sq.begin() + static_cast<long>(set.size()) - 1, 0.0);
            const bool fraction = got >= theta * total * (1.0 - 1e-12);
            const bool minimal = total == 0.0 ? set.empty() : smaller < theta * total;
            if (!fraction || !minimal) ++bad;
        }
        report(11, "Dörfler properties", bad == 0, fmt("%d of 1000 random vectors violate fraction or minimality", bad));
    });

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
