#include "waveadapt/fespace.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "waveadapt/quadrature.hpp"

namespace waveadapt {

Medium::Medium(std::vector<double> speed_per_macro) : speed_(std::move(speed_per_macro)) {
    for (double c : speed_) {
        if (!(c > 0.0) || !std::isfinite(c)) {
            throw std::invalid_argument("wave speed must be positive and finite");
        }
    }
}

double Medium::max_speed() const {
    return speed_.empty() ? 1.0 : *std::max_element(speed_.begin(), speed_.end());
}

void EllipticOperator::stiffness(std::span<const double> x, std::span<double> y) const {
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
        double v = stiff_diag[i] * x[i];
        if (i > 0) v += stiff_off[i - 1] * x[i - 1];
        if (i + 1 < n) v += stiff_off[i] * x[i + 1];
        y[i] = v;
    }
}

void EllipticOperator::mass(std::span<const double> x, std::span<double> y) const {
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
        double v = mass_diag[i] * x[i];
        if (i > 0) v += mass_off[i - 1] * x[i - 1];
        if (i + 1 < n) v += mass_off[i] * x[i + 1];
        y[i] = v;
    }
}

FeSpace::FeSpace(MeshSnapshot mesh, SpaceOptions options)
    : mesh_(std::move(mesh)), options_(std::move(options)) {
    nodes_ = mesh_.nodes();
    const std::size_t ne = mesh_.size();
    c2_.resize(ne);
    fine_element_.resize(ne);
    for (std::size_t e = 0; e < ne; ++e) {
        const double c = options_.medium.speed(mesh_[e].macro);
        c2_[e] = c * c;
        fine_element_[e] = h(e) < options_.h_ref * (1.0 - 1e-12) ? 1 : 0;
    }
    const std::size_t nd = ne > 0 ? ne - 1 : 0;
    op_.stiff_diag.assign(nd, 0.0);
    op_.stiff_off.assign(nd > 0 ? nd - 1 : 0, 0.0);
    op_.mass_diag.assign(nd, 0.0);
    op_.mass_off.assign(nd > 0 ? nd - 1 : 0, 0.0);
    op_.lumped.assign(nd, 0.0);
    fine_dof_.assign(nd, 0);
    for (std::size_t i = 0; i < nd; ++i) {
        // dof i lives on node i + 1, between elements i and i + 1.
        const double hl = h(i);
        const double hr = h(i + 1);
        op_.stiff_diag[i] = c2_[i] / hl + c2_[i + 1] / hr;
        op_.mass_diag[i] = (hl + hr) / 3.0;
        op_.lumped[i] = 0.5 * (hl + hr);
        if (i + 1 < nd) {
            op_.stiff_off[i] = -c2_[i + 1] / hr;
            op_.mass_off[i] = hr / 6.0;
        }
        if (fine_element_[i] || fine_element_[i + 1]) {
            fine_dof_[i] = 1;
            fine_list_.push_back(i);
        }
    }
}

std::shared_ptr<const FeSpace> FeSpace::create(MeshSnapshot mesh, SpaceOptions options) {
    return std::shared_ptr<const FeSpace>(new FeSpace(std::move(mesh), std::move(options)));
}

bool FeSpace::has_fine_elements() const {
    return std::any_of(fine_element_.begin(), fine_element_.end(), [](char f) { return f != 0; });
}

bool same_space(const FeSpace& a, const FeSpace& b) {
    return &a == &b || (a.mesh() == b.mesh() && a.options().h_ref == b.options().h_ref);
}

void require_compatible(const FeSpace& a, const FeSpace& b) {
    if (!a.mesh().same_forest(b.mesh())) {
        throw IncompatibleMeshError("function spaces live on different forests");
    }
}

SpacePtr sum_space(const SpacePtr& a, const SpacePtr& b) {
    require_compatible(*a, *b);
    MeshSnapshot r = common_refinement(a->mesh(), b->mesh());
    if (r == a->mesh()) return a;
    if (r == b->mesh()) return b;
    return FeSpace::create(std::move(r), a->options());
}

SpacePtr intersection_space(const SpacePtr& a, const SpacePtr& b) {
    require_compatible(*a, *b);
    MeshSnapshot r = common_coarsening(a->mesh(), b->mesh());
    if (r == a->mesh()) return a;
    if (r == b->mesh()) return b;
    return FeSpace::create(std::move(r), a->options());
}

FeFunction::FeFunction(SpacePtr space)
    : space_(std::move(space)), coeffs_(space_->num_dofs(), 0.0) {}

FeFunction::FeFunction(SpacePtr space, std::vector<double> coeffs)
    : space_(std::move(space)), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != space_->num_dofs()) {
        throw SpaceMismatchError("coefficient vector length does not match the space");
    }
}

double FeFunction::nodal(std::size_t j) const {
    if (j == 0 || j > coeffs_.size()) {
        return 0.0;
    }
    return coeffs_[j - 1];
}

double FeFunction::operator()(double x) const {
    const auto& xs = space_->nodes();
    if (x < xs.front() || x > xs.back()) {
        throw std::out_of_range("evaluation point outside the domain");
    }
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t e = it == xs.begin() ? 0 : static_cast<std::size_t>(it - xs.begin()) - 1;
    e = std::min(e, xs.size() - 2);
    const double lambda = (x - xs[e]) / (xs[e + 1] - xs[e]);
    const double ul = nodal(e);
    const double ur = nodal(e + 1);
    return lambda == 0.0 ? ul : ul + lambda * (ur - ul);
}

double FeFunction::slope(std::size_t e) const {
    return (nodal(e + 1) - nodal(e)) / space_->h(e);
}

namespace {

void require_same(const FeFunction& a, const FeFunction& b) {
    if (!same_space(*a.space(), *b.space())) {
        throw SpaceMismatchError("functions live on different spaces");
    }
}

}  // namespace

std::vector<std::size_t> containing_elements(const FeSpace& fine, const FeSpace& coarse) {
    const auto& xf = fine.nodes();
    const auto& xc = coarse.nodes();
    std::vector<std::size_t> owner(fine.num_elements());
    std::size_t j = 0;
    for (std::size_t k = 0; k < owner.size(); ++k) {
        while (j + 2 < xc.size() && xc[j + 1] < xf[k + 1]) {
            ++j;
        }
        owner[k] = j;
    }
    return owner;
}

std::vector<double> values_at_nodes(const FeFunction& u, const FeSpace& target) {
    const auto& xt = target.nodes();
    const auto& xs = u.space()->nodes();
    std::vector<double> vals(xt.size(), 0.0);
    std::size_t e = 0;
    for (std::size_t j = 0; j < xt.size(); ++j) {
        const double x = xt[j];
        while (e + 2 < xs.size() && xs[e + 1] <= x) {
            ++e;
        }
        const double lambda = (x - xs[e]) / (xs[e + 1] - xs[e]);
        const double ul = u.nodal(e);
        const double ur = u.nodal(e + 1);
        vals[j] = lambda == 0.0 ? ul : (lambda == 1.0 ? ur : ul + lambda * (ur - ul));
    }
    vals.front() = 0.0;
    vals.back() = 0.0;
    return vals;
}

namespace {

void solve_tridiagonal(const std::vector<double>& diag, const std::vector<double>& off,
                       std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    if (n == 0) return;
    std::vector<double> c(n, 0.0);
    double beta = diag[0];
    rhs[0] /= beta;
    for (std::size_t i = 1; i < n; ++i) {
        c[i - 1] = off[i - 1] / beta;
        beta = diag[i] - off[i - 1] * c[i - 1];
        rhs[i] = (rhs[i] - off[i - 1] * rhs[i - 1]) / beta;
    }
    for (std::size_t i = n - 1; i-- > 0;) {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

}  // namespace

FeFunction& FeFunction::operator+=(const FeFunction& other) {
    require_same(*this, other);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
    return *this;
}

FeFunction& FeFunction::operator-=(const FeFunction& other) {
    require_same(*this, other);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
    return *this;
}

FeFunction& FeFunction::operator*=(double s) {
    for (double& c : coeffs_) c *= s;
    return *this;
}

FeFunction& FeFunction::axpy(double s, const FeFunction& other) {
    require_same(*this, other);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += s * other.coeffs_[i];
    return *this;
}

FeFunction operator+(FeFunction a, const FeFunction& b) { return a += b; }
FeFunction operator-(FeFunction a, const FeFunction& b) { return a -= b; }
FeFunction operator*(double s, FeFunction a) { return a *= s; }

FeFunction interpolate(const ScalarFunction& f, const SpacePtr& space) {
    FeFunction u(space);
    const auto& xs = space->nodes();
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double v = f(xs[i + 1]);
        if (!std::isfinite(v)) {
            throw DataError("interpolated function is not finite at a node");
        }
        u[i] = v;
    }
    return u;
}

FeFunction transfer(const FeFunction& u, const SpacePtr& target) {
    require_compatible(*u.space(), *target);
    if (same_space(*u.space(), *target)) {
        return FeFunction(target, u.coeffs());
    }
    auto vals = values_at_nodes(u, *target);
    return FeFunction(target, std::vector<double>(vals.begin() + 1, vals.end() - 1));
}

FeFunction l2_project(const FeFunction& u, const SpacePtr& target) {
    require_compatible(*u.space(), *target);
    const SpacePtr common = sum_space(u.space(), target);
    const auto uv = values_at_nodes(u, *common);
    const auto owner = containing_elements(*common, *target);
    const auto& xr = common->nodes();
    const auto& xt = target->nodes();
    std::vector<double> load(target->num_dofs(), 0.0);
    for (std::size_t k = 0; k < common->num_elements(); ++k) {
        const std::size_t j = owner[k];
        const double hk = xr[k + 1] - xr[k];
        const double H = xt[j + 1] - xt[j];
        // Target hats on this sub-element: left hat phi_j and right hat phi_{j+1}.
        const double pl_l = (xt[j + 1] - xr[k]) / H;
        const double pl_r = (xt[j + 1] - xr[k + 1]) / H;
        const double pr_l = 1.0 - pl_l;
        const double pr_r = 1.0 - pl_r;
        const double a = uv[k];
        const double b = uv[k + 1];
        auto prod = [&](double p0, double p1) {
            return hk / 6.0 * (2.0 * a * p0 + a * p1 + b * p0 + 2.0 * b * p1);
        };
        if (j >= 1 && j - 1 < load.size()) load[j - 1] += prod(pl_l, pl_r);
        if (j < load.size()) load[j] += prod(pr_l, pr_r);
    }
    const auto& op = target->op();
    solve_tridiagonal(op.mass_diag, op.mass_off, load);
    return FeFunction(target, std::move(load));
}

FeFunction transfer(const FeFunction& u, const SpacePtr& target, TransferMode mode) {
    return mode == TransferMode::interpolation ? transfer(u, target) : l2_project(u, target);
}

FeFunction combine(std::span<const Term> terms) {
    if (terms.empty()) {
        throw std::invalid_argument("combine needs at least one term");
    }
    SpacePtr common = terms[0].function->space();
    for (const auto& t : terms.subspan(1)) {
        common = sum_space(common, t.function->space());
    }
    FeFunction out(common);
    for (const auto& t : terms) {
        out.axpy(t.weight, transfer(*t.function, common));
    }
    return out;
}

FeFunction difference(const FeFunction& a, const FeFunction& b) {
    const Term terms[] = {{1.0, &a}, {-1.0, &b}};
    return combine(terms);
}

FeFunction apply_A(const FeFunction& u) {
    const auto& op = u.space()->op();
    FeFunction out(u.space());
    op.stiffness(u.coeffs(), out.coeffs());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] /= op.lumped[i];
    }
    return out;
}

FeFunction apply_A_mixed(const FeFunction& w, const SpacePtr& target) {
    require_compatible(*w.space(), *target);
    if (same_space(*w.space(), *target)) {
        return apply_A(FeFunction(target, w.coeffs()));
    }
    const SpacePtr common = sum_space(w.space(), target);
    const auto wv = values_at_nodes(w, *common);
    const auto owner = containing_elements(*common, *target);
    const auto& xr = common->nodes();
    const auto& xt = target->nodes();
    FeFunction out(target);
    const std::size_t nd = out.size();
    for (std::size_t k = 0; k < common->num_elements(); ++k) {
        const std::size_t j = owner[k];
        const double hk = xr[k + 1] - xr[k];
        const double H = xt[j + 1] - xt[j];
        const double flux = common->c2(k) * (wv[k + 1] - wv[k]) / hk * hk / H;
        if (j >= 1 && j - 1 < nd) out[j - 1] -= flux;
        if (j < nd) out[j] += flux;
    }
    const auto& lumped = target->op().lumped;
    for (std::size_t i = 0; i < nd; ++i) {
        out[i] /= lumped[i];
    }
    return out;
}

FeFunction fine_interpolate(const FeFunction& u) {
    FeFunction out(u.space());
    for (std::size_t i : u.space()->fine_dofs()) {
        out[i] = u[i];
    }
    return out;
}

namespace {

template <class Kernel>
double mixed_integral(const FeFunction& u, const FeFunction& w, Kernel&& kernel) {
    require_compatible(*u.space(), *w.space());
    const SpacePtr common = sum_space(u.space(), w.space());
    const auto uv = values_at_nodes(u, *common);
    const auto wv = values_at_nodes(w, *common);
    const auto& xr = common->nodes();
    double sum = 0.0;
    for (std::size_t k = 0; k < common->num_elements(); ++k) {
        sum += kernel(xr[k + 1] - xr[k], common->c2(k), uv[k], uv[k + 1], wv[k], wv[k + 1]);
    }
    return sum;
}

}  // namespace

double energy_inner(const FeFunction& u, const FeFunction& w) {
    return mixed_integral(u, w, [](double h, double c2, double a0, double a1, double b0, double b1) {
        return c2 * (a1 - a0) * (b1 - b0) / h;
    });
}

double l2_inner(const FeFunction& u, const FeFunction& w) {
    return mixed_integral(u, w, [](double h, double, double a0, double a1, double b0, double b1) {
        return h / 6.0 * (2.0 * a0 * b0 + a0 * b1 + a1 * b0 + 2.0 * a1 * b1);
    });
}

double energy_norm(const FeFunction& u) {
    const auto& sp = *u.space();
    double sum = 0.0;
    for (std::size_t e = 0; e < sp.num_elements(); ++e) {
        const double d = u.nodal(e + 1) - u.nodal(e);
        sum += sp.c2(e) * d * d / sp.h(e);
    }
    return std::sqrt(sum);
}

double l2_norm(const FeFunction& u) {
    const auto& sp = *u.space();
    double sum = 0.0;
    for (std::size_t e = 0; e < sp.num_elements(); ++e) {
        const double a = u.nodal(e);
        const double b = u.nodal(e + 1);
        sum += sp.h(e) * (a * a + a * b + b * b) / 3.0;
    }
    return std::sqrt(sum);
}

double wave_energy_norm(const FeFunction& displacement, const FeFunction& velocity) {
    const double e = energy_norm(displacement);
    const double v = l2_norm(velocity);
    return std::sqrt(e * e + v * v);
}

double lumped_inner(const FeFunction& u, const FeFunction& w) {
    require_same(u, w);
    const auto& lumped = u.space()->op().lumped;
    double sum = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) sum += lumped[i] * u[i] * w[i];
    return sum;
}

double l2_error(const FeFunction& u, const ScalarFunction& f) {
    const auto& sp = *u.space();
    const auto& xs = sp.nodes();
    double sum = 0.0;
    for (std::size_t e = 0; e < sp.num_elements(); ++e) {
        const double a = u.nodal(e);
        const double s = u.slope(e);
        const double x0 = xs[e];
        sum += quad::integrate<5>(
            [&](double x) {
                const double d = a + s * (x - x0) - f(x);
                return d * d;
            },
            xs[e], xs[e + 1]);
    }
    return std::sqrt(sum);
}

double energy_error(const FeFunction& u, const ScalarFunction& dfdx) {
    const auto& sp = *u.space();
    const auto& xs = sp.nodes();
    double sum = 0.0;
    for (std::size_t e = 0; e < sp.num_elements(); ++e) {
        const double s = u.slope(e);
        sum += sp.c2(e) * quad::integrate<5>(
                              [&](double x) {
                                  const double d = s - dfdx(x);
                                  return d * d;
                              },
                              xs[e], xs[e + 1]);
    }
    return std::sqrt(sum);
}

double l2_norm_of(const ScalarFunction& f, const FeSpace& space) {
    const auto& xs = space.nodes();
    double sum = 0.0;
    for (std::size_t e = 0; e < space.num_elements(); ++e) {
        sum += quad::integrate<5>([&](double x) { return f(x) * f(x); }, xs[e], xs[e + 1]);
    }
    return std::sqrt(sum);
}

void write_function_csv(std::ostream& os, const FeFunction& u) {
    os << "x,value\n";
    const auto& xs = u.space()->nodes();
    for (std::size_t j = 0; j < xs.size(); ++j) {
        os << xs[j] << ',' << u.nodal(j) << '\n';
    }
}

}  // namespace waveadapt
