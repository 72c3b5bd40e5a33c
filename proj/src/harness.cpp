#include "waveadapt/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include "json.hpp"

namespace waveadapt {

namespace {

double gauss(double y) { return std::exp(-4.0 * y * y); }
double gauss_d1(double y) { return -8.0 * y * gauss(y); }
double gauss_d2(double y) { return (64.0 * y * y - 8.0) * gauss(y); }
double gauss_d3(double y) { return (192.0 * y - 512.0 * y * y * y) * gauss(y); }

const char* transfer_name(TransferMode m) { return m == TransferMode::interpolation ? "interpolation" : "l2"; }

}  // namespace

Experiment parse_experiment(const std::string& name) {
    if (name == "forced") return Experiment::forced;
    if (name == "traveling") return Experiment::traveling;
    if (name == "splitting") return Experiment::splitting;
    throw std::invalid_argument("unknown experiment: " + name);
}

std::string to_string(Experiment e) {
    switch (e) {
        case Experiment::forced: return "forced";
        case Experiment::traveling: return "traveling";
        case Experiment::splitting: return "splitting";
    }
    return "unknown";
}

SolverConfig SolverConfig::defaults(Experiment e) {
    SolverConfig cfg;
    cfg.experiment = e;
    cfg.T = e == Experiment::forced ? 1.0 : 1.33;
    cfg.h_c = e == Experiment::forced ? 0.3 : 0.11;
    return cfg;
}

void SolverConfig::validate() const {
    if (!(a < b)) throw std::invalid_argument("domain requires a < b");
    if (!(h_c > 0.0) || h_c > b - a) throw std::invalid_argument("h_c must be positive and fit the domain");
    if (!(c > 0.0)) throw std::invalid_argument("wave speed must be positive");
    if (!(T > 0.0)) throw std::invalid_argument("final time must be positive");
    if (!(cfl_safety > 0.0)) throw std::invalid_argument("cfl_safety must be positive");
    if (!(nu >= 0.0)) throw std::invalid_argument("nu must be nonnegative");
    if (depth_max > 20) throw std::invalid_argument("depth_max above 20 is not supported");
    if (forced_p < 1) throw std::invalid_argument("forced_p must be at least 1");
    if (!(tol_H > 0.0) || !(tol_C >= 0.0) || !(theta > 0.0 && theta < 1.0)) {
        throw std::invalid_argument("invalid adaptive tolerances");
    }
}

int SolverConfig::num_steps() const {
    return static_cast<int>(std::ceil(T / (cfl_safety * h_c / c) - 1e-9));
}

double SolverConfig::dt() const { return T / num_steps(); }

SolverConfig config_from_json(const std::string& text, SolverConfig cfg) {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    if (j.contains("experiment")) {
        // Experiment defaults first so explicit keys win.
        const auto out = cfg.out_dir;
        cfg = SolverConfig::defaults(parse_experiment(j.at("experiment").get<std::string>()));
        cfg.out_dir = out;
    }
    for (const auto& [key, value] : j.items()) {
        if (key == "experiment") continue;
        else if (key == "a") cfg.a = value.get<double>();
        else if (key == "b") cfg.b = value.get<double>();
        else if (key == "c") cfg.c = value.get<double>();
        else if (key == "h_c") cfg.h_c = value.get<double>();
        else if (key == "depth_max") cfg.depth_max = value.get<unsigned>();
        else if (key == "tol_H") cfg.tol_H = value.get<double>();
        else if (key == "tol_C") cfg.tol_C = value.get<double>();
        else if (key == "theta") cfg.theta = value.get<double>();
        else if (key == "T") cfg.T = value.get<double>();
        else if (key == "cfl_safety") cfg.cfl_safety = value.get<double>();
        else if (key == "nu") cfg.nu = value.get<double>();
        else if (key == "forced_p") cfg.forced_p = value.get<int>();
        else if (key == "threshold_divisor") cfg.threshold_divisor = value.get<double>();
        else if (key == "init_tol") cfg.init_tol = value.get<double>();
        else if (key == "max_iterations") cfg.max_iterations = value.get<int>();
        else if (key == "instability_factor") cfg.instability_factor = value.get<double>();
        else if (key == "out") cfg.out_dir = value.get<std::string>();
        else if (key == "transfer") {
            const auto s = value.get<std::string>();
            if (s == "interpolation") cfg.transfer = TransferMode::interpolation;
            else if (s == "l2") cfg.transfer = TransferMode::l2_projection;
            else throw std::invalid_argument("transfer must be interpolation or l2");
        } else if (key == "acceptance") {
            const auto s = value.get<std::string>();
            if (s == "min") cfg.acceptance = Acceptance::min;
            else if (s == "max") cfg.acceptance = Acceptance::max;
            else throw std::invalid_argument("acceptance must be min or max");
        } else if (key == "init_marking") {
            const auto s = value.get<std::string>();
            if (s == "dorfler") cfg.init_marking = InitMarking::dorfler;
            else if (s == "max-threshold") cfg.init_marking = InitMarking::max_threshold;
            else throw std::invalid_argument("init_marking must be dorfler or max-threshold");
        } else {
            throw std::invalid_argument("unknown config key: " + key);
        }
    }
    cfg.validate();
    return cfg;
}

std::string config_to_json(const SolverConfig& cfg) {
    nlohmann::ordered_json j;
    j["experiment"] = to_string(cfg.experiment);
    j["a"] = cfg.a;
    j["b"] = cfg.b;
    j["c"] = cfg.c;
    j["h_c"] = cfg.h_c;
    j["depth_max"] = cfg.depth_max;
    j["tol_H"] = cfg.tol_H;
    j["tol_C"] = cfg.tol_C;
    j["theta"] = cfg.theta;
    j["T"] = cfg.T;
    j["cfl_safety"] = cfg.cfl_safety;
    j["transfer"] = transfer_name(cfg.transfer);
    j["nu"] = cfg.nu;
    j["forced_p"] = cfg.forced_p;
    j["acceptance"] = cfg.acceptance == Acceptance::min ? "min" : "max";
    j["init_marking"] = cfg.init_marking == InitMarking::dorfler ? "dorfler" : "max-threshold";
    j["threshold_divisor"] = cfg.threshold_divisor;
    j["init_tol"] = cfg.init_tol;
    j["max_iterations"] = cfg.max_iterations;
    j["instability_factor"] = cfg.instability_factor;
    return j.dump(2);
}

ExactSolution ExactSolution::for_experiment(Experiment e) {
    ExactSolution s;
    switch (e) {
        case Experiment::forced:
            s.u = [](double x, double t) { return t * gauss(x - 1.0 - t); };
            s.ut = [](double x, double t) { return gauss(x - 1.0 - t) - t * gauss_d1(x - 1.0 - t); };
            s.ux = [](double x, double t) { return t * gauss_d1(x - 1.0 - t); };
            s.f = [](double x, double t) { return -2.0 * gauss_d1(x - 1.0 - t); };
            s.u0_xx = [](double) { return 0.0; };
            s.v0_xx = [](double x) { return gauss_d2(x - 1.0); };
            break;
        case Experiment::traveling:
            s.u = [](double x, double t) { return gauss(x - 1.0 - t); };
            s.ut = [](double x, double t) { return -gauss_d1(x - 1.0 - t); };
            s.ux = [](double x, double t) { return gauss_d1(x - 1.0 - t); };
            s.u0_xx = [](double x) { return gauss_d2(x - 1.0); };
            s.v0_xx = [](double x) { return -gauss_d3(x - 1.0); };
            break;
        case Experiment::splitting:
            s.u = [](double x, double t) { return 0.5 * (gauss(x - 1.0 - t) + gauss(x - 1.0 + t)); };
            s.ut = [](double x, double t) { return 0.5 * (gauss_d1(x - 1.0 + t) - gauss_d1(x - 1.0 - t)); };
            s.ux = [](double x, double t) { return 0.5 * (gauss_d1(x - 1.0 - t) + gauss_d1(x - 1.0 + t)); };
            s.u0_xx = [](double x) { return gauss_d2(x - 1.0); };
            s.v0_xx = [](double) { return 0.0; };
            break;
    }
    return s;
}

Problem ExactSolution::problem() const {
    Problem p;
    auto uf = u;
    auto utf = ut;
    p.u0 = [uf](double x) { return uf(x, 0.0); };
    p.v0 = [utf](double x) { return utf(x, 0.0); };
    p.u0_xx = u0_xx;
    p.v0_xx = v0_xx;
    p.f = f;
    return p;
}

MacroMesh anchored_macro_mesh(double a, double b, double h_c) {
    std::vector<double> pts;
    // Nodes k h_c inside (a, b); a remainder shorter than h_c joins the boundary element.
    const auto k_lo = static_cast<long>(std::ceil(a / h_c - 1e-9));
    const auto k_hi = static_cast<long>(std::floor(b / h_c + 1e-9));
    pts.push_back(a);
    for (long k = k_lo; k <= k_hi; ++k) {
        const double x = static_cast<double>(k) * h_c;
        if (x - a > 1e-9 * h_c && b - x > 1e-9 * h_c) pts.push_back(x);
    }
    pts.push_back(b);
    if (pts.size() > 3 && pts[1] - pts[0] < h_c * (1.0 - 1e-9)) pts.erase(pts.begin() + 1);
    if (pts.size() > 3 && pts[pts.size() - 1] - pts[pts.size() - 2] < h_c * (1.0 - 1e-9)) {
        pts.erase(pts.end() - 2);
    }
    return MacroMesh(pts);
}

MeshSnapshot forced_wave_schedule(const ForestPtr& forest, double t, double h_c) {
    const double s = h_c * std::floor(t / h_c + 1e-9);
    const MeshSnapshot coarse = MeshSnapshot::macro(forest);
    const std::size_t first = coarse.locate(std::min(s, forest->macro().b()));
    const auto count = static_cast<std::size_t>(std::ceil(2.0 / h_c - 1e-9));
    std::vector<ElementKey> marks;
    for (std::size_t i = first; i < std::min(first + count, coarse.size()); ++i) marks.push_back(coarse[i]);
    return refine(coarse, marks).mesh;
}

std::vector<Interval1> fine_regions(const FeSpace& space) {
    std::vector<Interval1> out;
    const auto& x = space.nodes();
    for (std::size_t e = 0; e < space.num_elements(); ++e) {
        if (!space.element_is_fine(e)) continue;
        if (!out.empty() && out.back().right == x[e]) {
            out.back().right = x[e + 1];
        } else {
            out.push_back({x[e], x[e + 1]});
        }
    }
    return out;
}

std::pair<double, double> accounting(const RunReport& report, unsigned depth) {
    if (report.dofs_uniform == 0 || report.N == 0) return {0.0, 0.0};
    std::size_t max_dofs = 0;
    double work = 0.0;
    for (const auto& s : report.steps) {
        max_dofs = std::max(max_dofs, s.dofs);
        if (s.n >= 1) {
            work += static_cast<double>(s.dofs - s.fine_dofs) + s.p * static_cast<double>(s.fine_dofs);
        }
    }
    const double uniform = static_cast<double>(report.dofs_uniform);
    const double memory = static_cast<double>(max_dofs) / uniform;
    const double steps_ref = static_cast<double>(report.N) * std::ldexp(1.0, static_cast<int>(depth));
    return {memory, work / (steps_ref * uniform)};
}

namespace {

void write_outputs(const RunReport& rep, const std::vector<std::pair<double, FeFunction>>& snapshots,
                   const std::vector<std::pair<double, MeshSnapshot>>& meshes) {
    namespace fs = std::filesystem;
    const fs::path dir(rep.config.out_dir);
    fs::create_directories(dir);
    {
        std::ofstream os(dir / "steps.csv");
        os.precision(10);
        os << "n,t,dofs,p,dt,energy\n";
        for (const auto& s : rep.steps) {
            os << s.n << ',' << s.t << ',' << s.dofs << ',' << s.p << ',' << rep.dt << ',' << s.energy << '\n';
        }
    }
    {
        std::ofstream os(dir / "errors.csv");
        os.precision(10);
        os << "n,t,energy_error,velocity_error\n";
        for (const auto& s : rep.steps) {
            os << s.n << ',' << s.t << ',' << s.energy_error << ',' << s.velocity_error << '\n';
        }
    }
    if (rep.config.experiment != Experiment::forced) {
        std::ofstream os(dir / "adapt.csv");
        os.precision(10);
        os << "n,t,inner_iterations,refined_count,coarsened_count,dofs,p,eps0,eps1\n";
        for (const auto& s : rep.steps) {
            if (s.n < 2) continue;
            os << s.n - 1 << ',' << s.t << ',' << s.iterations << ',' << s.refined << ',' << s.coarsened << ','
               << s.dofs << ',' << s.p << ',' << s.eps0_tested << ',' << s.eps1_tested << '\n';
        }
    }
    {
        std::ofstream os(dir / "indicators.csv");
        os.precision(10);
        write_indicator_header(os);
        for (const auto& r : rep.records) write_indicator_row(os, r);
    }
    {
        std::ofstream os(dir / "mesh.csv");
        os.precision(12);
        os << "step,t,x_left,x_right,level\n";
        for (std::size_t i = 0; i < meshes.size(); ++i) {
            write_snapshot_csv(os, static_cast<long>(i), meshes[i].first, meshes[i].second);
        }
    }
    for (const auto& [t, u] : snapshots) {
        char name[64];
        std::snprintf(name, sizeof name, "solution_%.4f.csv", t);
        std::ofstream os(dir / name);
        os.precision(12);
        write_function_csv(os, u);
    }
    {
        nlohmann::ordered_json j;
        j["config"] = nlohmann::json::parse(config_to_json(rep.config));
        j["N"] = rep.N;
        j["dt"] = rep.dt;
        j["initial_error"] = rep.initial_error;
        j["max_energy_error"] = rep.max_energy_error;
        j["max_velocity_error"] = rep.max_velocity_error;
        j["bound_energy"] = rep.bound_energy;
        j["bound_l2"] = rep.bound_l2;
        j["dofs_uniform"] = rep.dofs_uniform;
        j["memory_ratio"] = rep.memory_ratio;
        j["work_ratio"] = rep.work_ratio;
        j["seconds"] = rep.seconds;
        std::ofstream os(dir / "report.json");
        os << j.dump(2) << '\n';
    }
}

}  // namespace

RunReport run_experiment(const SolverConfig& config) {
    config.validate();
    const auto start_time = std::chrono::steady_clock::now();
    RunReport rep;
    rep.config = config;
    rep.N = config.num_steps();
    rep.dt = config.dt();
    const double dt = rep.dt;

    const ExactSolution exact = ExactSolution::for_experiment(config.experiment);
    const Problem problem = exact.problem();
    auto forest = std::make_shared<const Forest>(anchored_macro_mesh(config.a, config.b, config.h_c));
    const SpaceOptions options{config.h_c, Medium(std::vector<double>(forest->macro().size(), config.c))};
    const SpacePtr macro = FeSpace::create(MeshSnapshot::macro(forest), options);
    rep.dofs_uniform = (forest->macro().size() << config.depth_max) - 1;

    const bool forced = config.experiment == Experiment::forced;
    StepConfig step;
    step.dt = dt;
    step.nu = config.nu;
    step.transfer = config.transfer;
    step.p_cap = forced ? config.forced_p : (1 << config.depth_max);

    std::optional<AdaptConfig> adapt;
    SpacePtr v1;
    if (forced) {
        v1 = FeSpace::create(forced_wave_schedule(forest, 0.0, config.h_c), options);
    } else {
        AdaptConfig ac;
        ac.tol_H = config.tol_H;
        ac.tol_C = config.tol_C;
        ac.theta = config.theta;
        ac.N = rep.N;
        ac.depth_max = config.depth_max;
        ac.init_marking = config.init_marking;
        ac.acceptance = config.acceptance;
        ac.threshold_divisor = config.threshold_divisor;
        ac.init_tol = config.init_tol;
        ac.max_iterations = config.max_iterations;
        v1 = initialize_adaptive(problem, macro, ac);
        adapt = ac;
    }

    Driver driver(problem, step, adapt);
    driver.start(v1);

    auto exact_energy = [&](const FeSpace& sp, double t) {
        const double a = l2_norm_of([&](double x) { return exact.ut(x, t); }, sp);
        const double b = l2_norm_of([&](double x) { return config.c * exact.ux(x, t); }, sp);
        return 0.5 * (a * a + b * b);
    };
    auto summarize = [&](int n, double t, const SpacePtr& sp, const FeFunction& u, const FeFunction* v) {
        StepSummary s;
        s.n = n;
        s.t = t;
        s.dofs = sp->num_dofs();
        s.fine_dofs = sp->num_fine_dofs();
        s.p = lts_ratio(*sp, step.p_cap);
        s.energy_error = energy_error(u, [&](double x) { return exact.ux(x, t); });
        if (v != nullptr) {
            const double th = t - 0.5 * dt;
            s.velocity_error = l2_error(*v, [&](double x) { return exact.ut(x, th); });
        }
        s.fine_regions = fine_regions(*sp);
        double mass = 0.0;
        double moment = 0.0;
        for (const auto& r : s.fine_regions) {
            mass += r.right - r.left;
            moment += 0.5 * (r.right * r.right - r.left * r.left);
        }
        s.fine_centroid = mass > 0.0 ? moment / mass : std::nan("");
        return s;
    };

    const StepState& st = driver.state();
    {
        StepSummary s0 = summarize(0, 0.0, v1, driver.u0(), nullptr);
        rep.steps.push_back(s0);
        StepSummary s1 = summarize(1, dt, v1, st.u, &st.v_half);
        s1.energy = discrete_energy(st.u, st.u_prev, dt, LtsParams(s1.p, config.nu));
        s1.eps0_tested = driver.initial_eps0();
        s1.eps1_tested = driver.initial_eps1();
        rep.steps.push_back(s1);
    }
    const double e_u0 = energy_error(driver.u0(), [&](double x) { return exact.ux(x, 0.0); });
    const double e_v0 = l2_error(driver.v0(), [&](double x) { return exact.ut(x, 0.0); });
    rep.initial_error = std::sqrt(e_u0 * e_u0 + e_v0 * e_v0);

    BoundAccumulator bounds(rep.initial_error);
    {
        IndicatorRecord seed;
        seed.eps0 = driver.initial_eps0();
        seed.eps1 = driver.initial_eps1();
        bounds.add(seed);
    }
    const double energy_scale = std::max(rep.steps[1].energy, exact_energy(*v1, 0.0));

    std::vector<std::pair<double, FeFunction>> snapshots{{0.0, driver.u0()}};
    std::vector<std::pair<double, MeshSnapshot>> meshes{{0.0, v1->mesh()}};
    for (int n = 1; n < rep.N; ++n) {
        StepReport sr;
        if (forced) {
            const SpacePtr next = FeSpace::create(forced_wave_schedule(forest, st.t, config.h_c), options);
            sr = driver.step(same_space(*next, *st.space) ? st.space : next);
        } else {
            sr = driver.step();
        }
        bounds.add(sr.record);
        rep.records.push_back(sr.record);
        StepSummary s = summarize(n + 1, sr.t_next, st.space, st.u, &st.v_half);
        s.dofs = sr.dofs;
        s.fine_dofs = sr.fine_dofs;
        s.p = sr.p;
        s.energy = sr.energy;
        s.iterations = sr.iterations;
        s.refined = sr.refined.size();
        s.coarsened = sr.coarsened.size();
        s.eps0_tested = sr.eps0_tested;
        s.eps1_tested = sr.eps1_tested;
        rep.steps.push_back(s);
        meshes.emplace_back(sr.t_next - dt, st.space->mesh());
        const double limit = config.instability_factor * std::max(energy_scale, exact_energy(*st.space, sr.t_next));
        if (!std::isfinite(sr.energy) || std::abs(sr.energy) > limit) {
            throw InstabilityError("discrete energy " + std::to_string(sr.energy) + " exceeds " +
                                   std::to_string(limit) + " at t = " + std::to_string(sr.t_next));
        }
    }
    snapshots.emplace_back(st.t, st.u);

    for (const auto& s : rep.steps) {
        rep.max_energy_error = std::max(rep.max_energy_error, s.energy_error);
        rep.max_velocity_error = std::max(rep.max_velocity_error, s.velocity_error);
    }
    rep.bound_energy = bounds.bound_energy();
    rep.bound_l2 = bounds.bound_l2();
    std::tie(rep.memory_ratio, rep.work_ratio) = accounting(rep, config.depth_max);
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
    if (!config.out_dir.empty()) write_outputs(rep, snapshots, meshes);
    return rep;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope needs two or more points");
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ConvergenceTable convergence_study(const SolverConfig& config, const std::vector<double>& hs) {
    if (hs.size() < 3) throw std::invalid_argument("convergence study needs at least three mesh sizes");
    ConvergenceTable table;
    for (double h : hs) {
        SolverConfig c = config;
        c.experiment = Experiment::forced;
        c.h_c = h;
        if (!config.out_dir.empty()) {
            char sub[32];
            std::snprintf(sub, sizeof sub, "h_%g", h);
            c.out_dir = (std::filesystem::path(config.out_dir) / sub).string();
        }
        const RunReport r = run_experiment(c);
        table.rows.push_back({h, r.N, r.dt, r.max_energy_error, r.max_velocity_error, r.bound_energy, r.bound_l2});
    }
    std::vector<double> x, e, v, be, bl;
    for (const auto& r : table.rows) {
        x.push_back(r.h);
        e.push_back(r.energy_error);
        v.push_back(r.velocity_error);
        be.push_back(r.bound_energy);
        bl.push_back(r.bound_l2);
    }
    table.energy_slope = loglog_slope(x, e);
    table.velocity_slope = loglog_slope(x, v);
    table.bound_energy_slope = loglog_slope(x, be);
    table.bound_l2_slope = loglog_slope(x, bl);
    if (!config.out_dir.empty()) {
        std::filesystem::create_directories(config.out_dir);
        write_convergence_csv(std::filesystem::path(config.out_dir) / "convergence.csv", table);
    }
    return table;
}

void write_convergence_csv(const std::filesystem::path& file, const ConvergenceTable& table) {
    std::ofstream os(file);
    os.precision(10);
    os << "h,N,dt,energy_error,velocity_error,bound_energy,bound_l2\n";
    for (const auto& r : table.rows) {
        os << r.h << ',' << r.N << ',' << r.dt << ',' << r.energy_error << ',' << r.velocity_error << ','
           << r.bound_energy << ',' << r.bound_l2 << '\n';
    }
}

}  // namespace waveadapt
