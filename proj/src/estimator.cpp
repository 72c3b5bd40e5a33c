#include "waveadapt/estimator.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "waveadapt/quadrature.hpp"

namespace waveadapt {

ElementEstimate elliptic_estimator(const FeFunction& w, const SpacePtr& v, Norm norm) {
    const SpacePtr common = sum_space(w.space(), v);
    const FeFunction av = apply_A_mixed(w, v);
    const auto avals = values_at_nodes(av, *common);
    const auto wvals = values_at_nodes(w, *common);
    const auto owner = containing_elements(*common, *v);
    const std::size_t ne = common->num_elements();

    std::vector<double> flux(ne);
    for (std::size_t k = 0; k < ne; ++k) {
        flux[k] = common->c2(k) * (wvals[k + 1] - wvals[k]) / common->h(k);
    }
    ElementEstimate out{0.0, common, std::vector<double>(ne, 0.0)};
    double sum = 0.0;
    for (std::size_t k = 0; k < ne; ++k) {
        const double H = v->h(owner[k]);
        const double hk = common->h(k);
        const double a0 = avals[k];
        const double a1 = avals[k + 1];
        const double interior = hk / 3.0 * (a0 * a0 + a0 * a1 + a1 * a1);
        double jumps = 0.0;
        if (k > 0) jumps += std::pow(flux[k] - flux[k - 1], 2);
        if (k + 1 < ne) jumps += std::pow(flux[k + 1] - flux[k], 2);
        const double H2 = H * H;
        const double e2 = norm == Norm::energy ? H2 * interior + 0.5 * H * jumps
                                               : H2 * H2 * interior + 0.5 * H2 * H * jumps;
        out.eta[k] = std::sqrt(e2);
        sum += e2;
    }
    out.total = std::sqrt(sum);
    return out;
}

double TimeShapes::hat(double t, double t_nu, double dt) {
    return std::max(0.0, 1.0 - std::abs(t - t_nu) / dt);
}

double TimeShapes::bubble(double t, double t_nu, double dt) {
    const double s = (t - t_nu) / dt;
    return std::max(0.0, 0.125 - 0.5 * s * s);
}

namespace {

// |d|_A + E_A[d, V] or the L2 analogue; zero without work when d vanishes identically.
double defect_indicator(const FeFunction& d, const SpacePtr& v, Norm norm) {
    bool zero = true;
    for (double c : d.coeffs()) {
        if (c != 0.0) {
            zero = false;
            break;
        }
    }
    if (zero) return 0.0;
    const double nrm = norm == Norm::energy ? energy_norm(d) : l2_norm(d);
    return nrm + elliptic_estimator(d, v, norm).total;
}

}  // namespace

MeshChange mesh_change_indicators(const FeFunction& u_prev, const FeFunction& v_half, const FeFunction& lts_au,
                                  const SpacePtr& space_next, double dt, TransferMode mode) {
    const SpacePtr& space_n = v_half.space();
    MeshChange out;
    const SpacePtr meet = intersection_space(space_n, space_next);
    if (!same_space(*u_prev.space(), *space_n)) {
        const FeFunction d = difference(transfer(u_prev, space_n, mode), u_prev);
        out.mu0 = defect_indicator(d, meet, Norm::energy) / dt;
    }
    if (!same_space(*space_n, *space_next)) {
        const FeFunction d1 = difference(transfer(v_half, space_next, mode), v_half);
        out.mu1 = defect_indicator(d1, meet, Norm::l2) / dt;
        const FeFunction d2 = difference(lts_au, transfer(lts_au, space_next, mode));
        out.mu2 = defect_indicator(d2, space_next, Norm::l2);
    }
    return out;
}

LtsIndicators lts_indicators(const FeFunction& au, const FeFunction& lts_au, const SpacePtr& space_next,
                             double mu2) {
    LtsIndicators out;
    out.alpha0 = l2_norm(difference(au, lts_au));
    out.alpha1 = elliptic_estimator(lts_au, space_next, Norm::l2).total;
    out.alpha = out.alpha0 + out.alpha1 + mu2;
    return out;
}

TimeIndicatorData prepare_time_indicators(const TimeHistory& h, double t_prev, double dt) {
    TimeIndicatorData out;
    out.t_prev = t_prev;
    out.dt = dt;
    if (!h.v_next || !h.v_half || !h.v_prev || !h.au_next || !h.au || !h.au_prev || !h.au_prev2) {
        return out;
    }
    out.available = true;
    const Term x_terms[] = {{1.0, h.v_next}, {-2.0, h.v_half}, {1.0, h.v_prev}};
    const FeFunction x = combine(x_terms);
    const Term y0_terms[] = {{0.5 * dt, h.au}, {-0.5 * dt, h.au_prev2}};
    const Term y1_terms[] = {{0.5 * dt, h.au_next}, {-0.5 * dt, h.au_prev}};
    const FeFunction y0 = combine(y0_terms);
    const FeFunction y1 = combine(y1_terms);
    out.xx = energy_inner(x, x);
    out.xy = {energy_inner(x, y0), energy_inner(x, y1)};
    out.yy = {energy_inner(y0, y0), energy_inner(y1, y1)};
    const SpacePtr meet =
        intersection_space(intersection_space(h.v_prev->space(), h.v_half->space()), h.v_next->space());
    out.ex = elliptic_estimator(x, meet, Norm::energy).total;

    const Term p_terms[] = {{dt, h.v_next}, {-dt, h.v_half}};
    const Term q_terms[] = {{0.5 * dt, h.v_next}, {-0.5 * dt, h.v_prev}};
    const FeFunction p = combine(p_terms);
    const FeFunction q = combine(q_terms);
    out.pp = l2_inner(p, p);
    out.pq = l2_inner(p, q);
    out.qq = l2_inner(q, q);
    return out;
}

double TimeIndicatorData::theta0(double t) const {
    if (!available) return 0.0;
    const double t_n = t_prev + dt;
    const double a = 0.5 * (TimeShapes::hat(t, t_n, dt) - 1.0);
    const int half = t < t_prev + 0.5 * dt ? 0 : 1;
    const double q = TimeShapes::bubble(t, half == 0 ? t_prev : t_n, dt);
    const double sq = a * a * xx - 2.0 * a * q * xy[half] + q * q * yy[half];
    return std::sqrt(std::max(0.0, sq)) + std::abs(a) * ex;
}

double TimeIndicatorData::theta1(double t) const {
    if (!available) return 0.0;
    const double l = TimeShapes::hat(t, t_prev + dt, dt);
    const double q = TimeShapes::bubble(t, t_prev + 0.5 * dt, dt);
    const double sq = 0.25 * l * l * pp - l * q * pq + q * q * qq;
    return std::sqrt(std::max(0.0, sq));
}

double data_indicator(const FeFunction& f_discrete, const ScalarFunction& f) {
    return l2_error(f_discrete, f);
}

CoarseningIndicators coarsening_preindicators(const FeFunction& y) {
    const FeSpace& sp = *y.space();
    const MeshSnapshot& mesh = sp.mesh();
    const std::size_t ne = sp.num_elements();
    constexpr double inf = std::numeric_limits<double>::infinity();
    CoarseningIndicators out{std::vector<double>(ne, inf), std::vector<double>(ne, inf)};
    for (std::size_t e = 0; e + 1 < ne; ++e) {
        const ElementKey& k = mesh[e];
        if (k.level == 0 || k.index % 2 != 0 || !(mesh[e + 1] == k.sibling())) continue;
        const double d = std::abs(y.nodal(e + 1) - 0.5 * (y.nodal(e) + y.nodal(e + 2)));
        for (std::size_t s : {e, e + 1}) {
            out.beta0[s] = d * std::sqrt(sp.c2(s) / sp.h(s));
            out.beta1[s] = d * std::sqrt(sp.h(s) / 3.0);
        }
    }
    return out;
}

double zeta_half(const std::function<double(double)>& integrand, double a, double b) {
    return quad::integrate<3>(integrand, a, b);
}

void BoundAccumulator::add(IndicatorRecord& rec) {
    zeta_sum_ += rec.zeta[0] + rec.zeta[1];
    max_eps0_ = std::max(max_eps0_, rec.eps0);
    max_eps1_ = std::max(max_eps1_, rec.eps1);
    rec.bound_energy = bound_energy();
    rec.bound_l2 = bound_l2();
}

void write_indicator_header(std::ostream& os) {
    os << "n,t,eps0,eps1,mu0,mu1,mu2,alpha0,alpha1,alpha,zeta_half1,zeta_half2,delta_mean,"
          "bound_energy_running,bound_l2_running\n";
}

void write_indicator_row(std::ostream& os, const IndicatorRecord& r) {
    os << r.n << ',' << r.t << ',' << r.eps0 << ',' << r.eps1 << ',' << r.mu.mu0 << ',' << r.mu.mu1 << ','
       << r.mu.mu2 << ',' << r.alpha.alpha0 << ',' << r.alpha.alpha1 << ',' << r.alpha.alpha << ','
       << r.zeta[0] << ',' << r.zeta[1] << ',' << r.delta_mean << ',' << r.bound_energy << ','
       << r.bound_l2 << '\n';
}

}  // namespace waveadapt
