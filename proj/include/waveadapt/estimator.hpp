#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "waveadapt/fespace.hpp"
#include "waveadapt/lts.hpp"

namespace waveadapt {

enum class Norm { energy, l2 };

/// Residual estimator split over the elements of `space`, the common refinement of the
/// argument's mesh and the test mesh.
struct ElementEstimate {
    double total = 0.0;
    SpacePtr space;
    std::vector<double> eta;
};

/// Residual estimator of w against the test space V. Interior residual is A_V w (P1 has no
/// strong second derivative), jumps are of the flux c^2 w'. h-powers (2, 1) for the energy
/// norm and (4, 3) for L2, with h taken from the element of V containing K.
ElementEstimate elliptic_estimator(const FeFunction& w, const SpacePtr& v, Norm norm);

/// Temporal hat on [t_{nu-1}, t_{nu+1}] and bubble supported on |t - t_nu| < dt/2.
struct TimeShapes {
    static double hat(double t, double t_nu, double dt);
    static double bubble(double t, double t_nu, double dt);
};

struct MeshChange {
    double mu0 = 0.0;
    double mu1 = 0.0;
    double mu2 = 0.0;
};

/// Inputs: U^{n-1} on V_{n-1}, V^{n-1/2} and Ã_n U^n on V_n, and the new space V_{n+1}.
MeshChange mesh_change_indicators(const FeFunction& u_prev, const FeFunction& v_half, const FeFunction& lts_au,
                                  const SpacePtr& space_next, double dt, TransferMode mode);

struct LtsIndicators {
    double alpha0 = 0.0;
    double alpha1 = 0.0;
    double alpha = 0.0;
};

/// alpha0 = |(A - Ã) U|_L2, alpha1 = E_L2[Ã U, V_{n+1}], alpha = alpha0 + alpha1 + mu2.
LtsIndicators lts_indicators(const FeFunction& au, const FeFunction& lts_au, const SpacePtr& space_next,
                             double mu2);

/// Gram data for the two time indicators of step n over [t_{n-1}, t_n].
/// With X = dt^2 d^2 V^{n-1/2}, Y_m = dt^2 d[A_m U^m] and a = (l_n - 1)/2:
///   theta0 = |a X - q_m Y_m|_A + |a| E_A[X, V_{n-1} ∩ V_n ∩ V_{n+1}]
/// with m = n-1 on the first half and m = n on the second. With P = dt^2 d^2 U^n and
/// Q = dt^2 d V^{n-1/2}: theta1 = |l_n P / 2 - q_{n-1/2} Q|_L2.
struct TimeIndicatorData {
    bool available = false;
    double t_prev = 0.0;  // t_{n-1}
    double dt = 0.0;
    double xx = 0.0;
    std::array<double, 2> xy{};
    std::array<double, 2> yy{};
    double ex = 0.0;
    double pp = 0.0;
    double pq = 0.0;
    double qq = 0.0;

    double theta0(double t) const;
    double theta1(double t) const;
};

struct TimeHistory {
    const FeFunction* v_next;   // V^{n+1/2}
    const FeFunction* v_half;   // V^{n-1/2}
    const FeFunction* v_prev;   // V^{n-3/2}
    const FeFunction* au_next;  // A_{n+1} U^{n+1}
    const FeFunction* au;       // A_n U^n
    const FeFunction* au_prev;  // A_{n-1} U^{n-1}
    const FeFunction* au_prev2; // A_{n-2} U^{n-2}
};

/// Any null pointer yields an unavailable record (steps n < 2).
TimeIndicatorData prepare_time_indicators(const TimeHistory& h, double t_prev, double dt);

/// |F - f(t)|_L2 by 5-point Gauss on F's mesh.
double data_indicator(const FeFunction& f_discrete, const ScalarFunction& f);

/// Coarsening pre-indicators per element. Elements without an active sibling get +inf.
struct CoarseningIndicators {
    std::vector<double> beta0;
    std::vector<double> beta1;
};
CoarseningIndicators coarsening_preindicators(const FeFunction& y);

/// 3-point Gauss integral of a scalar integrand over [a, b].
double zeta_half(const std::function<double(double)>& integrand, double a, double b);

struct IndicatorRecord {
    int n = 0;
    double t = 0.0;  // t_n
    double eps0 = 0.0;
    double eps1 = 0.0;
    MeshChange mu;
    LtsIndicators alpha;
    bool time_available = false;
    std::array<double, 2> zeta{};
    double delta_mean = 0.0;
    double bound_energy = 0.0;
    double bound_l2 = 0.0;
};

/// Running bound accumulator: e0 + 2 Σ zeta + max eps.
class BoundAccumulator {
public:
    explicit BoundAccumulator(double e0 = 0.0) : e0_(e0) {}
    void add(IndicatorRecord& rec);
    double zeta_sum() const { return zeta_sum_; }
    double bound_energy() const { return e0_ + 2.0 * zeta_sum_ + max_eps0_; }
    double bound_l2() const { return e0_ + 2.0 * zeta_sum_ + max_eps1_; }

private:
    double e0_;
    double zeta_sum_ = 0.0;
    double max_eps0_ = 0.0;
    double max_eps1_ = 0.0;
};

void write_indicator_header(std::ostream& os);
void write_indicator_row(std::ostream& os, const IndicatorRecord& rec);

}  // namespace waveadapt
