#pragma once

#include <stdexcept>

#include "waveadapt/fespace.hpp"

namespace waveadapt {

/// Power iteration (or another iterative estimate) failed to settle.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Chebyshev polynomial of the first kind, three-term recursion.
double cheb_T(int p, double x);
/// T_p'(x) = p U_{p-1}(x).
double cheb_T_derivative(int p, double x);

/// Coarse-to-fine step ratio p and damping nu of the local time-stepping polynomial.
class LtsParams {
public:
    explicit LtsParams(int p = 1, double nu = 0.0);

    int p() const { return p_; }
    double nu() const { return nu_; }
    /// delta = 1 + nu / p^2
    double delta() const { return delta_; }
    /// omega = 2 T_p'(delta) / T_p(delta)
    double omega() const { return omega_; }
    /// T_p(delta)
    double tau() const { return tau_; }

private:
    int p_;
    double nu_;
    double delta_;
    double omega_;
    double tau_;
};

/// P_p(x), or the damped P_{p,nu}(x) when nu > 0; P(0) = 1.
double stability_poly(const LtsParams& params, double x);

/// Ã U = A P(dt^2 Π^f A) U via the damped Chebyshev recursion. Inner products with
/// Π^f A touch only fine dofs and their neighbours.
FeFunction apply_lts(const FeFunction& u, double dt, const LtsParams& params);

/// Largest eigenvalue of M_lumped^{-1} K by power iteration.
double max_eigenvalue(const FeSpace& space, int max_iterations = 200000, double tol = 1e-12);

/// Spectral radius of the one-step amplification matrix [[2I - dt^2 Ã, -I], [I, 0]],
/// from the eigenvalues of the symmetrised dt^2 Ã.
double amplification_radius(const SpacePtr& space, double dt, const LtsParams& params);

/// Largest stable global step. p = 1 uses 2 / sqrt(lambda_max); p > 1 scans dt upwards
/// and bisects the first loss of stability (radius > 1 + 1e-10).
double max_stable_dt(const SpacePtr& space, const LtsParams& params);

/// Step ratio from the mesh: max over fine elements of ceil(h_ref / h_K), capped.
int lts_ratio(const FeSpace& space, int cap);

}  // namespace waveadapt
