#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "waveadapt/harness.hpp"

using namespace waveadapt;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("waveadapt_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("exact solutions satisfy the wave equation") {
    for (auto e : {Experiment::forced, Experiment::traveling, Experiment::splitting}) {
        const auto s = ExactSolution::for_experiment(e);
        const double k = 1e-4;
        for (double x : {-0.7, 0.4, 1.3, 2.2}) {
            for (double t : {0.2, 0.9, 1.25}) {
                const double utt = (s.u(x, t + k) - 2.0 * s.u(x, t) + s.u(x, t - k)) / (k * k);
                const double uxx = (s.u(x + k, t) - 2.0 * s.u(x, t) + s.u(x - k, t)) / (k * k);
                const double f = s.f ? s.f(x, t) : 0.0;
                CHECK(utt - uxx == doctest::Approx(f).epsilon(1e-5).scale(1.0));
                const double ut = (s.u(x, t + 1e-6) - s.u(x, t - 1e-6)) / 2e-6;
                const double ux = (s.u(x + 1e-6, t) - s.u(x - 1e-6, t)) / 2e-6;
                CHECK(s.ut(x, t) == doctest::Approx(ut).epsilon(1e-6).scale(1.0));
                CHECK(s.ux(x, t) == doctest::Approx(ux).epsilon(1e-6).scale(1.0));
            }
        }
    }
}

TEST_CASE("experiment names round trip") {
    for (auto e : {Experiment::forced, Experiment::traveling, Experiment::splitting}) {
        CHECK(parse_experiment(to_string(e)) == e);
    }
    CHECK_THROWS_AS(parse_experiment("standing"), std::invalid_argument);
}

TEST_CASE("anchored macro mesh has nodes on multiples of h_c") {
    const auto m = anchored_macro_mesh(-10.0, 10.0, 0.3);
    CHECK(m.a() == -10.0);
    CHECK(m.b() == 10.0);
    for (std::size_t i = 1; i + 1 < m.breakpoints().size(); ++i) {
        const double k = m.breakpoints()[i] / 0.3;
        CHECK(k == doctest::Approx(std::round(k)));
    }
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(m.width(i) >= 0.3 - 1e-12);
}

TEST_CASE("forced-wave schedule windows") {
    auto forest = std::make_shared<const Forest>(anchored_macro_mesh(-10.0, 10.0, 0.3));
    auto window = [&](double t) {
        const auto s = forced_wave_schedule(forest, t, 0.3);
        std::size_t parents = 0;
        double lo = 1e9;
        double hi = -1e9;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i].level == 0) continue;
            ++parents;
            lo = std::min(lo, s.interval(i).left);
            hi = std::max(hi, s.interval(i).right);
        }
        return std::tuple{parents / 2, lo, hi};
    };
    auto [n0, lo0, hi0] = window(0.0);
    CHECK(n0 == 7);
    CHECK(lo0 == doctest::Approx(0.0));
    CHECK(hi0 == doctest::Approx(2.1));
    auto [n1, lo1, hi1] = window(1.0);
    CHECK(n1 == 7);
    CHECK(lo1 == doctest::Approx(0.9));
    CHECK(hi1 == doctest::Approx(3.0));
}

TEST_CASE("log-log slope") {
    CHECK(loglog_slope({1.0, 2.0, 4.0}, {3.0, 12.0, 48.0}) == doctest::Approx(2.0));
    CHECK(loglog_slope({0.1, 0.2}, {5.0, 5.0}) == doctest::Approx(0.0));
}

TEST_CASE("accounting of a uniform run is one") {
    RunReport r;
    r.N = 3;
    r.dofs_uniform = 15;
    for (int n = 0; n <= 3; ++n) {
        StepSummary s;
        s.n = n;
        s.dofs = 15;
        s.fine_dofs = 15;
        s.p = 4;
        r.steps.push_back(s);
    }
    // 4 fine steps of 15 dofs per coarse step against N 2^2 uniform steps.
    const auto [memory, work] = accounting(r, 2);
    CHECK(memory == doctest::Approx(1.0));
    CHECK(work == doctest::Approx(1.0));
}

TEST_CASE("config JSON round trip") {
    SolverConfig c = SolverConfig::defaults(Experiment::splitting);
    c.h_c = 0.2;
    c.transfer = TransferMode::l2_projection;
    c.acceptance = Acceptance::max;
    c.theta = 0.6;
    const SolverConfig back = config_from_json(config_to_json(c), SolverConfig{});
    CHECK(back.experiment == Experiment::splitting);
    CHECK(back.h_c == 0.2);
    CHECK(back.theta == 0.6);
    CHECK(back.T == c.T);
    CHECK(back.transfer == TransferMode::l2_projection);
    CHECK(back.acceptance == Acceptance::max);
    CHECK(config_to_json(back) == config_to_json(c));
    CHECK_THROWS(config_from_json(R"({"hc": 0.1})", SolverConfig{}));
    CHECK_THROWS(config_from_json(R"({"theta": 1.5})", SolverConfig{}));
}

TEST_CASE("step count and size") {
    SolverConfig c = SolverConfig::defaults(Experiment::forced);
    CHECK(c.T == 1.0);
    c.h_c = 0.3;
    CHECK(c.num_steps() == 4);
    CHECK(c.dt() == doctest::Approx(0.25));
}

TEST_CASE("forced run reaches the exact peak and writes its outputs") {
    SolverConfig c = SolverConfig::defaults(Experiment::forced);
    c.h_c = 0.1;
    c.out_dir = scratch_dir("forced").string();
    const RunReport r = run_experiment(c);
    CHECK(r.N == c.num_steps());
    CHECK(r.steps.size() == static_cast<std::size_t>(r.N) + 1);
    for (const char* f : {"steps.csv", "errors.csv", "indicators.csv", "mesh.csv", "report.json",
                          "solution_0.0000.csv", "solution_1.0000.csv"}) {
        CHECK(fs::exists(fs::path(c.out_dir) / f));
    }
    std::ifstream in(fs::path(c.out_dir) / "solution_1.0000.csv");
    std::string line;
    std::getline(in, line);
    double peak = 0.0;
    double at = 0.0;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        double x = 0.0;
        double v = 0.0;
        char comma = 0;
        row >> x >> comma >> v;
        if (v > peak) {
            peak = v;
            at = x;
        }
    }
    CHECK(peak == doctest::Approx(1.0).epsilon(0.1));
    CHECK(at == doctest::Approx(2.0).epsilon(0.05));

    // The t = 0 error is the interpolation error of the data on V_1.
    auto forest = std::make_shared<const Forest>(anchored_macro_mesh(c.a, c.b, c.h_c));
    const auto v1 = FeSpace::create(forced_wave_schedule(forest, 0.0, c.h_c),
                                    SpaceOptions{c.h_c, Medium(std::vector<double>(forest->macro().size(), 1.0))});
    const auto exact = ExactSolution::for_experiment(Experiment::forced);
    const FeFunction v0 = interpolate([&](double x) { return exact.ut(x, 0.0); }, v1);
    CHECK(r.initial_error == doctest::Approx(l2_error(v0, [&](double x) { return exact.ut(x, 0.0); })));
    fs::remove_all(c.out_dir);
}

TEST_CASE("runs are deterministic") {
    SolverConfig c = SolverConfig::defaults(Experiment::traveling);
    c.T = 0.2;
    const RunReport a = run_experiment(c);
    const RunReport b = run_experiment(c);
    REQUIRE(a.steps.size() == b.steps.size());
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
        CHECK(a.steps[i].dofs == b.steps[i].dofs);
        CHECK(a.steps[i].energy == b.steps[i].energy);
    }
    CHECK(a.max_energy_error == b.max_energy_error);
}
