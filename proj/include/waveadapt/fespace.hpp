#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "waveadapt/mesh.hpp"

namespace waveadapt {

/// Thrown when same-space algebra is attempted on functions from different spaces.
class SpaceMismatchError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Non-finite data handed to an interpolation.
class DataError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

using ScalarFunction = std::function<double(double)>;

/// Wave speed, constant on each macro element.
class Medium {
public:
    Medium() = default;
    explicit Medium(std::vector<double> speed_per_macro);

    double speed(std::uint32_t macro) const {
        return speed_.empty() ? 1.0 : speed_[macro];
    }
    double max_speed() const;

private:
    std::vector<double> speed_;
};

struct SpaceOptions {
    /// Elements strictly smaller than this are fine.
    double h_ref = 0.0;
    Medium medium;
};

/// Tridiagonal P1 operators on the interior dofs. Off-diagonals couple dof i and i+1.
struct EllipticOperator {
    std::vector<double> stiff_diag;
    std::vector<double> stiff_off;
    std::vector<double> mass_diag;
    std::vector<double> mass_off;
    std::vector<double> lumped;

    std::size_t size() const { return lumped.size(); }
    /// y = K x
    void stiffness(std::span<const double> x, std::span<double> y) const;
    /// y = M x (consistent)
    void mass(std::span<const double> x, std::span<double> y) const;
};

/// Continuous P1 space with homogeneous Dirichlet values at both ends of the domain.
/// Dof i sits on mesh node i + 1.
class FeSpace {
public:
    static std::shared_ptr<const FeSpace> create(MeshSnapshot mesh, SpaceOptions options);

    const MeshSnapshot& mesh() const { return mesh_; }
    const SpaceOptions& options() const { return options_; }
    const EllipticOperator& op() const { return op_; }

    std::size_t num_elements() const { return mesh_.size(); }
    std::size_t num_dofs() const { return op_.size(); }
    const std::vector<double>& nodes() const { return nodes_; }
    double h(std::size_t e) const { return nodes_[e + 1] - nodes_[e]; }
    /// c(x)^2 on element e.
    double c2(std::size_t e) const { return c2_[e]; }

    bool element_is_fine(std::size_t e) const { return fine_element_[e] != 0; }
    bool dof_is_fine(std::size_t i) const { return fine_dof_[i] != 0; }
    const std::vector<std::size_t>& fine_dofs() const { return fine_list_; }
    std::size_t num_fine_dofs() const { return fine_list_.size(); }
    std::size_t num_coarse_dofs() const { return num_dofs() - fine_list_.size(); }
    bool has_fine_elements() const;

private:
    FeSpace(MeshSnapshot mesh, SpaceOptions options);

    MeshSnapshot mesh_;
    SpaceOptions options_;
    std::vector<double> nodes_;
    std::vector<double> c2_;
    std::vector<char> fine_element_;
    std::vector<char> fine_dof_;
    std::vector<std::size_t> fine_list_;
    EllipticOperator op_;
};

using SpacePtr = std::shared_ptr<const FeSpace>;

bool same_space(const FeSpace& a, const FeSpace& b);
void require_compatible(const FeSpace& a, const FeSpace& b);
/// Space on the common refinement of both meshes; reuses `a` or `b` when possible.
SpacePtr sum_space(const SpacePtr& a, const SpacePtr& b);
/// Space on the common coarsening of both meshes.
SpacePtr intersection_space(const SpacePtr& a, const SpacePtr& b);

/// Coefficient vector bound to one space.
class FeFunction {
public:
    FeFunction() = default;
    explicit FeFunction(SpacePtr space);
    FeFunction(SpacePtr space, std::vector<double> coeffs);

    const SpacePtr& space() const { return space_; }
    std::vector<double>& coeffs() { return coeffs_; }
    const std::vector<double>& coeffs() const { return coeffs_; }
    std::size_t size() const { return coeffs_.size(); }
    double operator[](std::size_t i) const { return coeffs_[i]; }
    double& operator[](std::size_t i) { return coeffs_[i]; }

    /// Value at mesh node j, zero on the boundary.
    double nodal(std::size_t j) const;
    double operator()(double x) const;
    /// Derivative on element e.
    double slope(std::size_t e) const;

    FeFunction& operator+=(const FeFunction& other);
    FeFunction& operator-=(const FeFunction& other);
    FeFunction& operator*=(double s);
    /// this += s * other
    FeFunction& axpy(double s, const FeFunction& other);

private:
    SpacePtr space_;
    std::vector<double> coeffs_;
};

FeFunction operator+(FeFunction a, const FeFunction& b);
FeFunction operator-(FeFunction a, const FeFunction& b);
FeFunction operator*(double s, FeFunction a);

/// For each element of `fine` (which refines `coarse`), the index of its containing coarse element.
std::vector<std::size_t> containing_elements(const FeSpace& fine, const FeSpace& coarse);
/// Values of u at every node of `target`, boundary included.
std::vector<double> values_at_nodes(const FeFunction& u, const FeSpace& target);

/// Nodal interpolant of f; Dirichlet values are forced to zero.
FeFunction interpolate(const ScalarFunction& f, const SpacePtr& space);
/// Lagrange interpolation of U at the nodes of `target`. Exact when target refines U's mesh.
FeFunction transfer(const FeFunction& u, const SpacePtr& target);
/// Consistent-mass L2 projection onto `target`, load vector integrated exactly.
FeFunction l2_project(const FeFunction& u, const SpacePtr& target);

enum class TransferMode { interpolation, l2_projection };
FeFunction transfer(const FeFunction& u, const SpacePtr& target, TransferMode mode);

/// Sum of weighted functions, expressed on the common refinement of their meshes.
struct Term {
    double weight;
    const FeFunction* function;
};
FeFunction combine(std::span<const Term> terms);
/// a - b on the common refinement.
FeFunction difference(const FeFunction& a, const FeFunction& b);

/// M_lumped^{-1} K U on U's own space.
FeFunction apply_A(const FeFunction& u);
/// A_V w for w on a compatible space: a(w, phi_i) assembled on the common refinement,
/// divided by V's lumped mass.
FeFunction apply_A_mixed(const FeFunction& w, const SpacePtr& target);

/// Copies fine coefficients and zeros coarse ones.
FeFunction fine_interpolate(const FeFunction& u);

/// a(u, w) and (u, w) for functions on compatible spaces, evaluated exactly.
double energy_inner(const FeFunction& u, const FeFunction& w);
double l2_inner(const FeFunction& u, const FeFunction& w);
double energy_norm(const FeFunction& u);
double l2_norm(const FeFunction& u);
double wave_energy_norm(const FeFunction& displacement, const FeFunction& velocity);
/// Lumped-mass inner product on a single space.
double lumped_inner(const FeFunction& u, const FeFunction& w);

/// ||U - f||_{L2} and ||c (U' - f')||_{L2} by 5-point Gauss per element.
double l2_error(const FeFunction& u, const ScalarFunction& f);
double energy_error(const FeFunction& u, const ScalarFunction& dfdx);
/// ||f||_{L2} over the mesh of `space` by 5-point Gauss per element.
double l2_norm_of(const ScalarFunction& f, const FeSpace& space);

/// Writes `x,value` rows at every mesh node.
void write_function_csv(std::ostream& os, const FeFunction& u);

}  // namespace waveadapt
