#include "waveadapt/lts.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace waveadapt {

double cheb_T(int p, double x) {
    if (p < 0) {
        throw std::invalid_argument("Chebyshev degree must be nonnegative");
    }
    if (p == 0) return 1.0;
    double t0 = 1.0;
    double t1 = x;
    for (int k = 2; k <= p; ++k) {
        const double t2 = 2.0 * x * t1 - t0;
        t0 = t1;
        t1 = t2;
    }
    return t1;
}

double cheb_T_derivative(int p, double x) {
    if (p < 0) {
        throw std::invalid_argument("Chebyshev degree must be nonnegative");
    }
    if (p == 0) return 0.0;
    // Second-kind recursion: U_0 = 1, U_1 = 2x.
    double u0 = 1.0;
    double u1 = 2.0 * x;
    if (p == 1) return 1.0;
    for (int k = 2; k <= p - 1; ++k) {
        const double u2 = 2.0 * x * u1 - u0;
        u0 = u1;
        u1 = u2;
    }
    return p * u1;
}

LtsParams::LtsParams(int p, double nu) : p_(p), nu_(nu) {
    if (p < 1) {
        throw std::invalid_argument("LTS step ratio p must be at least 1");
    }
    if (!(nu >= 0.0)) {
        throw std::invalid_argument("LTS damping nu must be nonnegative");
    }
    delta_ = 1.0 + nu / (static_cast<double>(p) * p);
    tau_ = cheb_T(p, delta_);
    omega_ = 2.0 * cheb_T_derivative(p, delta_) / tau_;
}

double stability_poly(const LtsParams& params, double x) {
    // T_k(delta - x/omega) = tau_k - (x/2) S_k(x), and P(x) = S_p(x) / tau_p.
    const double delta = params.delta();
    const double omega = params.omega();
    double tau_prev = 1.0;   // tau_0
    double tau_cur = delta;  // tau_1
    double s_prev = 0.0;
    double s_cur = 2.0 / omega;
    for (int k = 2; k <= params.p(); ++k) {
        const double s_next = 4.0 / omega * tau_cur + 2.0 * delta * s_cur -
                              2.0 * x / omega * s_cur - s_prev;
        const double tau_next = 2.0 * delta * tau_cur - tau_prev;
        s_prev = s_cur;
        s_cur = s_next;
        tau_prev = tau_cur;
        tau_cur = tau_next;
    }
    return s_cur / tau_cur;
}

namespace {

// y_i = (A x)_i for the listed dofs only, x arbitrary.
void apply_A_rows(const FeSpace& space, const std::vector<double>& x,
                  const std::vector<std::size_t>& rows, std::vector<double>& y) {
    const auto& op = space.op();
    const std::size_t n = op.size();
    for (std::size_t i : rows) {
        double v = op.stiff_diag[i] * x[i];
        if (i > 0) v += op.stiff_off[i - 1] * x[i - 1];
        if (i + 1 < n) v += op.stiff_off[i] * x[i + 1];
        y[i] = v / op.lumped[i];
    }
}

}  // namespace

FeFunction apply_lts(const FeFunction& u, double dt, const LtsParams& params) {
    const FeSpace& space = *u.space();
    FeFunction au = apply_A(u);
    const auto& fine = space.fine_dofs();
    if (params.p() == 1 || fine.empty()) {
        return au;
    }
    const std::size_t n = space.num_dofs();
    const double delta = params.delta();
    const double omega = params.omega();
    const double scale = 2.0 * dt * dt / omega;

    // s_k = sigma_k U + r_k with r_k supported on fine dofs.
    std::vector<double> g(n, 0.0);  // Π^f A U
    for (std::size_t i : fine) g[i] = au[i];

    std::vector<double> r_prev(n, 0.0);
    std::vector<double> r_cur(n, 0.0);
    std::vector<double> r_next(n, 0.0);
    std::vector<double> br(n, 0.0);
    double sigma_prev = 0.0;
    double sigma_cur = 2.0 / omega;
    double tau_prev = 1.0;
    double tau_cur = delta;
    for (int k = 2; k <= params.p(); ++k) {
        apply_A_rows(space, r_cur, fine, br);
        for (std::size_t i : fine) {
            r_next[i] = 2.0 * delta * r_cur[i] - scale * (sigma_cur * g[i] + br[i]) - r_prev[i];
        }
        const double sigma_next = 4.0 / omega * tau_cur + 2.0 * delta * sigma_cur - sigma_prev;
        const double tau_next = 2.0 * delta * tau_cur - tau_prev;
        std::swap(r_prev, r_cur);
        std::swap(r_cur, r_next);
        sigma_prev = sigma_cur;
        sigma_cur = sigma_next;
        tau_prev = tau_cur;
        tau_cur = tau_next;
    }
    // Ã U = (sigma_p A U + A r_p) / tau_p; A r_p lives on fine dofs and their neighbours.
    FeFunction out(u.space());
    for (std::size_t i = 0; i < n; ++i) out[i] = sigma_cur / tau_cur * au[i];
    std::vector<std::size_t> touched;
    touched.reserve(fine.size() + 2);
    for (std::size_t i : fine) {
        if (i > 0 && (touched.empty() || touched.back() < i - 1)) touched.push_back(i - 1);
        if (touched.empty() || touched.back() < i) touched.push_back(i);
        if (i + 1 < n) touched.push_back(i + 1);
    }
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    std::fill(br.begin(), br.end(), 0.0);
    apply_A_rows(space, r_cur, touched, br);
    for (std::size_t i : touched) out[i] += br[i] / tau_cur;
    return out;
}

double max_eigenvalue(const FeSpace& space, int max_iterations, double tol) {
    const auto& op = space.op();
    const std::size_t n = op.size();
    if (n == 0) return 0.0;
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = std::sqrt(op.lumped[i]);
    // Symmetric form S = M^{-1/2} K M^{-1/2}; the highest mode alternates in sign.
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = (i % 2 == 0 ? 1.0 : -1.0) * (1.0 + 1e-3 * std::sin(1.0 + i));
    std::vector<double> tmp(n);
    std::vector<double> sy(n);
    double lambda = 0.0;
    int stable = 0;
    for (int it = 0; it < max_iterations; ++it) {
        double nrm = 0.0;
        for (double v : y) nrm += v * v;
        nrm = std::sqrt(nrm);
        for (double& v : y) v /= nrm;
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] / sq[i];
        op.stiffness(tmp, sy);
        double rq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sy[i] /= sq[i];
            rq += y[i] * sy[i];
        }
        if (std::abs(rq - lambda) <= tol * std::abs(rq)) {
            if (++stable >= 5) return rq;
        } else {
            stable = 0;
        }
        lambda = rq;
        y.swap(sy);
    }
    throw NumericalError("power iteration did not converge");
}

double amplification_radius(const SpacePtr& space, double dt, const LtsParams& params) {
    const std::size_t n = space->num_dofs();
    if (n == 0) return 1.0;
    Eigen::MatrixXd h(n, n);
    const auto& lumped = space->op().lumped;
    FeFunction unit(space);
    for (std::size_t j = 0; j < n; ++j) {
        std::fill(unit.coeffs().begin(), unit.coeffs().end(), 0.0);
        unit[j] = 1.0;
        const FeFunction col = apply_lts(unit, dt, params);
        for (std::size_t i = 0; i < n; ++i) {
            h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                dt * dt * std::sqrt(lumped[i] / lumped[j]) * col[i];
        }
    }
    const Eigen::MatrixXd sym = 0.5 * (h + h.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
    double radius = 1.0;
    for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k) {
        const double s = solver.eigenvalues()(k);
        // Roots of z^2 - (2 - s) z + 1 leave the unit circle outside [0, 4].
        const double b = 0.5 * (2.0 - s);
        if (std::abs(b) > 1.0) {
            radius = std::max(radius, std::abs(b) + std::sqrt(b * b - 1.0));
        }
    }
    return radius;
}

double max_stable_dt(const SpacePtr& space, const LtsParams& params) {
    const double lambda = max_eigenvalue(*space);
    if (lambda <= 0.0) {
        throw NumericalError("operator has no positive spectrum");
    }
    const double lf_limit = 2.0 / std::sqrt(lambda);
    if (params.p() == 1) {
        return lf_limit;
    }
    constexpr double kSlack = 1e-10;
    auto stable = [&](double dt) { return amplification_radius(space, dt, params) <= 1.0 + kSlack; };
    const double upper = 1.5 * params.p() * lf_limit;
    constexpr int kSamples = 300;
    double lo = 0.0;
    double hi = upper;
    bool found = false;
    for (int k = 1; k <= kSamples; ++k) {
        const double dt = upper * k / kSamples;
        if (!stable(dt)) {
            hi = dt;
            found = true;
            break;
        }
        lo = dt;
    }
    if (!found) {
        return upper;
    }
    for (int it = 0; it < 60 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (stable(mid) ? lo : hi) = mid;
    }
    return lo;
}

int lts_ratio(const FeSpace& space, int cap) {
    int p = 1;
    for (std::size_t e = 0; e < space.num_elements(); ++e) {
        if (space.element_is_fine(e)) {
            const double ratio = space.options().h_ref / space.h(e);
            p = std::max(p, static_cast<int>(std::ceil(ratio - 1e-9)));
        }
    }
    return std::min(p, std::max(cap, 1));
}

}  // namespace waveadapt
