#include "waveadapt/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "waveadapt/quadrature.hpp"

namespace waveadapt {

std::vector<std::size_t> dorfler_mark(std::span<const double> eta, double theta) {
    std::vector<std::size_t> order(eta.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return eta[a] > eta[b]; });
    double total = 0.0;
    for (double e : eta) total += e * e;
    std::vector<std::size_t> out;
    if (total <= 0.0) return out;
    const double goal = theta * total;
    double sum = 0.0;
    for (std::size_t i : order) {
        if (sum >= goal) break;
        sum += eta[i] * eta[i];
        out.push_back(i);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::size_t> max_threshold_mark(std::span<const double> eta, double theta) {
    std::vector<std::size_t> out;
    if (eta.empty()) return out;
    const double top = *std::max_element(eta.begin(), eta.end());
    for (std::size_t i = 0; i < eta.size(); ++i) {
        if (eta[i] > theta * top) out.push_back(i);
    }
    return out;
}

void AdaptConfig::validate() const {
    if (!(tol_H > 0.0)) throw std::invalid_argument("tol_H must be positive");
    if (!(tol_C >= 0.0)) throw std::invalid_argument("tol_C must be nonnegative");
    if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("theta must lie in (0, 1)");
    if (N < 1) throw std::invalid_argument("N must be at least 1");
    if (max_iterations < 1) throw std::invalid_argument("max_iterations must be at least 1");
}

double AdaptConfig::step_threshold() const {
    const double divisor = threshold_divisor > 0.0 ? threshold_divisor : N * std::ldexp(1.0, static_cast<int>(depth_max));
    return tol_H / divisor;
}

namespace {

std::vector<double> curvature_indicator(const ScalarFunction& second, const FeSpace& space) {
    std::vector<double> eta(space.num_elements(), 0.0);
    if (!second) return eta;
    const auto& x = space.nodes();
    for (std::size_t e = 0; e < eta.size(); ++e) {
        const double sq = quad::integrate<5>([&](double s) { return second(s) * second(s); }, x[e], x[e + 1]);
        eta[e] = space.h(e) * std::sqrt(sq);
    }
    return eta;
}

std::vector<ElementKey> keys_of(const MeshSnapshot& mesh, const std::vector<std::size_t>& idx) {
    std::vector<ElementKey> keys;
    keys.reserve(idx.size());
    for (std::size_t i : idx) keys.push_back(mesh[i]);
    return keys;
}

}  // namespace

SpacePtr initialize_adaptive(const Problem& problem, const SpacePtr& macro, const AdaptConfig& config) {
    config.validate();
    const double tol = config.init_tol >= 0.0 ? config.init_tol : config.step_threshold();
    SpacePtr space = macro;
    // Each sweep bisects at least one element, so the loop is bounded by the forest size.
    for (;;) {
        bool changed = false;
        for (const ScalarFunction* field : {&problem.u0_xx, &problem.v0_xx}) {
            const auto eta = curvature_indicator(*field, *space);
            double total = 0.0;
            for (double e : eta) total += e * e;
            if (std::sqrt(total) <= tol) continue;
            const auto marks = config.init_marking == InitMarking::dorfler ? dorfler_mark(eta, config.theta)
                                                                            : max_threshold_mark(eta, config.theta);
            auto r = refine(space->mesh(), keys_of(space->mesh(), marks), config.depth_max);
            if (!r.refined.empty()) {
                space = FeSpace::create(std::move(r.mesh), space->options());
                changed = true;
            }
        }
        if (!changed) break;
    }
    return space;
}

Driver::Driver(Problem problem, StepConfig step, std::optional<AdaptConfig> adapt)
    : problem_(std::move(problem)), step_(step), adapt_(std::move(adapt)) {
    if (!(step_.dt > 0.0)) throw std::invalid_argument("time step must be positive");
    if (adapt_) adapt_->validate();
}

void Driver::start(const SpacePtr& v1) {
    const double dt = step_.dt;
    const LtsParams params(lts_ratio(*v1, step_.p_cap), step_.nu);
    FeFunction f0;
    if (problem_.f) {
        f0 = interpolate([&](double x) { return problem_.f(x, 0.0); }, v1);
    }
    auto first = init_first_steps(problem_.u0, problem_.v0, v1, dt, problem_.f ? &f0 : nullptr, params);
    u0_ = first.u0;
    v0_ = first.v0;
    state_ = StepState{};
    state_.n = 1;
    state_.t = dt;
    state_.dt = dt;
    state_.space = v1;
    state_.space_prev = v1;
    state_.u = first.u1;
    state_.u_prev = first.u0;
    state_.u_prev_own = first.u0;
    state_.au = apply_A(first.u1);
    state_.au_prev = apply_A(first.u0);
    state_.v_half = velocity(first.u1, first.u0, dt);
    eps0_init_ = elliptic_estimator(state_.u, v1, Norm::energy).total;
    eps1_init_ = elliptic_estimator(state_.v_half, v1, Norm::l2).total;
}

Driver::Attempt Driver::compute(const SpacePtr& space) const {
    Attempt a;
    a.space = space;
    a.u = transfer(state_.u, space, step_.transfer);
    const FeFunction up = transfer(state_.u_prev, space, step_.transfer);
    a.p = lts_ratio(*space, step_.p_cap);
    const LtsParams params(a.p, step_.nu);
    if (problem_.f) {
        const double t = state_.t;
        a.f = interpolate([&](double x) { return problem_.f(x, t); }, space);
    }
    a.u_next = leapfrog_step(a.u, up, problem_.f ? &a.f : nullptr, step_.dt, params);
    a.v_next = velocity(a.u_next, a.u, step_.dt);
    return a;
}

StepReport Driver::step(const SpacePtr& prescribed) {
    const double dt = step_.dt;
    const int n = state_.n;
    const double t_n = state_.t;
    StepReport rep;
    rep.n = n;
    rep.t_next = t_n + dt;

    const LtsParams params_n(lts_ratio(*state_.space, step_.p_cap), step_.nu);
    const FeFunction lts_au = apply_lts(state_.u, dt, params_n);

    auto record_work = [&](const Attempt& at) {
        rep.p = at.p;
        rep.dofs = at.space->num_dofs();
        rep.fine_dofs = at.space->num_fine_dofs();
    };
    Attempt a;
    double eps0 = 0.0;
    double eps1 = 0.0;
    if (prescribed || !adapt_) {
        a = compute(prescribed ? prescribed : state_.space);
        eps0 = elliptic_estimator(a.u_next, a.space, Norm::energy).total;
        eps1 = elliptic_estimator(a.v_next, a.space, Norm::l2).total;
        rep.eps0_tested = eps0;
        rep.eps1_tested = eps1;
        record_work(a);
    } else {
        const AdaptConfig& cfg = *adapt_;
        const double threshold = cfg.step_threshold();
        SpacePtr candidate = state_.space;
        double best = std::numeric_limits<double>::infinity();
        std::set<ElementKey> refined;
        for (int it = 0;; ++it) {
            a = compute(candidate);
            const auto e0 = elliptic_estimator(a.u_next, candidate, Norm::energy);
            const auto e1 = elliptic_estimator(a.v_next, candidate, Norm::l2);
            eps0 = e0.total;
            eps1 = e1.total;
            const double crit = cfg.acceptance == Acceptance::min ? std::min(eps0, eps1) : std::max(eps0, eps1);
            rep.criterion_history.push_back(crit);
            best = std::min(best, crit);
            rep.iterations = it + 1;
            if (crit <= threshold) break;
            if (it + 1 >= cfg.max_iterations) {
                throw ToleranceUnreachableError("refinement loop cap reached at step " + std::to_string(n), best);
            }
            // Elements at the depth cap cannot be bisected, so they do not take part in marking.
            auto refinable = [&](std::vector<double> eta) {
                for (std::size_t e = 0; e < eta.size(); ++e) {
                    if (candidate->mesh()[e].level >= cfg.depth_max) eta[e] = 0.0;
                }
                return eta;
            };
            auto marks = dorfler_mark(refinable(e0.eta), cfg.theta);
            const auto m1 = dorfler_mark(refinable(e1.eta), cfg.theta);
            marks.insert(marks.end(), m1.begin(), m1.end());
            std::sort(marks.begin(), marks.end());
            marks.erase(std::unique(marks.begin(), marks.end()), marks.end());
            auto r = refine(candidate->mesh(), keys_of(candidate->mesh(), marks), cfg.depth_max);
            if (r.refined.empty()) {
                throw ToleranceUnreachableError(
                    "all marked elements are at the depth limit at step " + std::to_string(n), best);
            }
            refined.insert(r.refined.begin(), r.refined.end());
            candidate = FeSpace::create(std::move(r.mesh), candidate->options());
        }
        rep.eps0_tested = eps0;
        rep.eps1_tested = eps1;
        rep.refined.assign(refined.begin(), refined.end());
        record_work(a);

        const auto beta = coarsening_preindicators(a.u_next);
        const MeshSnapshot& mesh = candidate->mesh();
        std::vector<ElementKey> marks;
        for (std::size_t e = 0; e < mesh.size(); ++e) {
            if (std::max(beta.beta0[e], beta.beta1[e]) < cfg.tol_C && mesh[e].level > 0 &&
                !refined.contains(mesh[e].parent())) {
                marks.push_back(mesh[e]);
            }
        }
        auto c = coarsen(mesh, marks);
        if (!c.coarsened.empty()) {
            rep.coarsened = c.coarsened;
            const SpacePtr coarse = FeSpace::create(std::move(c.mesh), candidate->options());
            a.u_next = transfer(a.u_next, coarse, step_.transfer);
            a.u = transfer(a.u, coarse, step_.transfer);
            a.v_next = velocity(a.u_next, a.u, dt);
            a.space = coarse;
            eps0 = elliptic_estimator(a.u_next, coarse, Norm::energy).total;
            eps1 = elliptic_estimator(a.v_next, coarse, Norm::l2).total;
        }
    }
    const SpacePtr& next = a.space;

    IndicatorRecord& rec = rep.record;
    rec.n = n;
    rec.t = t_n;
    rec.eps0 = eps0;
    rec.eps1 = eps1;
    rec.mu = mesh_change_indicators(state_.u_prev_own, state_.v_half, lts_au, next, dt, step_.transfer);
    rec.alpha = lts_indicators(state_.au, lts_au, next, rec.mu.mu2);
    const FeFunction au_next = apply_A(a.u_next);
    auto ptr = [](const FeFunction& f) { return f.space() ? &f : nullptr; };
    const TimeHistory hist{&a.v_next,           &state_.v_half, ptr(state_.v_half_prev), &au_next,
                           &state_.au,          ptr(state_.au_prev), ptr(state_.au_prev2)};
    const TimeIndicatorData tdata = prepare_time_indicators(hist, t_n - dt, dt);
    rec.time_available = tdata.available;

    auto delta = [&](double t) {
        if (!problem_.f) return 0.0;
        return data_indicator(a.f, [&](double x) { return problem_.f(x, t); });
    };
    const MeshChange mu = rec.mu;
    const double alpha = rec.alpha.alpha;
    double delta_sum = 0.0;
    int delta_count = 0;
    auto integrand = [&](double t) {
        const double d = delta(t);
        delta_sum += d;
        ++delta_count;
        const double g0 = mu.mu0 + tdata.theta0(t);
        const double g1 = alpha + mu.mu1 + d + tdata.theta1(t);
        return std::sqrt(g0 * g0 + g1 * g1);
    };
    const double t_prev = t_n - dt;
    rec.zeta[0] = zeta_half(integrand, t_prev, t_prev + 0.5 * dt);
    rec.zeta[1] = zeta_half(integrand, t_prev + 0.5 * dt, t_n);
    rec.delta_mean = delta_count > 0 ? delta_sum / delta_count : 0.0;

    rep.energy = discrete_energy(a.u_next, a.u, dt, LtsParams(lts_ratio(*next, step_.p_cap), step_.nu));

    state_.u_prev_own = state_.u;
    state_.u_prev = a.u;
    state_.u = a.u_next;
    state_.au_prev2 = state_.au_prev;
    state_.au_prev = state_.au;
    state_.au = au_next;
    state_.v_half_prev = state_.v_half;
    state_.v_half = a.v_next;
    state_.space_prev = state_.space;
    state_.space = next;
    state_.n = n + 1;
    state_.t = t_n + dt;
    return rep;
}

}  // namespace waveadapt
