#include "spdelab/reaction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "spdelab/error.hpp"

namespace spdelab {

namespace {

constexpr int kProfilePoints = 65;

double falling_factorial(int k, int j) {
  double r = 1.0;
  for (int i = 0; i < j; ++i) r *= (k - i);
  return r;
}

// Horner evaluation of d^j/dz^j sum_k p[k] z^k.
double horner_derivative(std::span<const double> p, double z, int order) {
  const int n = static_cast<int>(p.size()) - 1;
  if (order > n) return 0.0;
  double acc = 0.0;
  for (int k = n; k >= order; --k) {
    acc = acc * z + p[k] * falling_factorial(k, order);
  }
  return acc;
}

std::vector<double> profile_points() {
  std::vector<double> s(kProfilePoints);
  for (int i = 0; i < kProfilePoints; ++i) {
    s[i] = std::numbers::pi * i / (kProfilePoints - 1);
  }
  return s;
}

std::vector<double> poly_on_profile(const ReactionSpec& spec, double s) {
  std::vector<double> p(spec.poly.size());
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = spec.poly[k].profile(s);
  return p;
}

}  // namespace

double CosineSeries::operator()(std::span<const double> xi) const {
  double v = terms.empty() ? 0.0 : terms[0];
  if (terms.size() <= 1 || xi.empty()) return v;
  for (std::size_t j = 1; j < terms.size(); ++j) {
    double mean = 0.0;
    for (double x : xi) mean += std::cos(static_cast<double>(j) * x);
    v += terms[j] * mean / static_cast<double>(xi.size());
  }
  return v;
}

double CosineSeries::profile(double s) const {
  double v = terms.empty() ? 0.0 : terms[0];
  for (std::size_t j = 1; j < terms.size(); ++j) {
    v += terms[j] * std::cos(static_cast<double>(j) * s);
  }
  return v;
}

bool CosineSeries::is_constant() const {
  return std::all_of(terms.begin() + std::min<std::size_t>(1, terms.size()),
                     terms.end(), [](double c) { return c == 0.0; });
}

ReactionSpec ReactionSpec::polynomial(std::vector<double> p) {
  if (p.size() < 2 || p.size() % 2 != 0) {
    throw ConfigError("reaction polynomial needs 2m+2 coefficients p_0..p_{2m+1}");
  }
  ReactionSpec spec;
  spec.m = static_cast<int>(p.size() / 2) - 1;
  for (double c : p) spec.poly.push_back(CosineSeries::constant(c));
  return spec;
}

bool ReactionSpec::is_zero() const {
  return std::all_of(poly.begin(), poly.end(), [](const CosineSeries& c) {
    return std::all_of(c.terms.begin(), c.terms.end(), [](double v) { return v == 0.0; });
  });
}

bool ReactionSpec::is_affine() const {
  for (std::size_t k = 2; k < poly.size(); ++k) {
    for (double v : poly[k].terms) {
      if (v != 0.0) return false;
    }
  }
  return true;
}

double ReactionSpec::leading_coefficient_inf() const {
  double inf = std::numeric_limits<double>::infinity();
  for (double s : profile_points()) inf = std::min(inf, -poly.back().profile(s));
  return inf;
}

std::vector<std::string> reaction_violations(const ReactionSpec& spec) {
  std::vector<std::string> out;
  if (spec.m < 0) out.push_back("degree parameter m must be non-negative");
  if (static_cast<int>(spec.poly.size()) != 2 * spec.m + 2) {
    out.push_back("reaction needs exactly 2m+2 polynomial coefficients");
    return out;
  }
  for (const auto& c : spec.poly) {
    for (double v : c.terms) {
      if (!std::isfinite(v)) {
        out.push_back("reaction coefficients must be finite");
        return out;
      }
    }
  }
  if (spec.m >= 1 && !(spec.leading_coefficient_inf() > 0.0)) {
    out.push_back(
        "leading coefficient C_{2m+1}(xi) must be strictly positive "
        "(b must decay like -z^{2m+1})");
  }
  return out;
}

double eval_b(const ReactionSpec& spec, std::span<const double> xi, double z, int order) {
  if (order < 0 || order > 3) throw DomainError("b derivatives are available up to order 3");
  std::vector<double> p(spec.poly.size());
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = spec.poly[k](xi);
  return horner_derivative(p, z, order);
}

std::array<double, 4> growth_constants(const ReactionSpec& spec) {
  // |sum_k p_k k!/(k-j)! z^{k-j}| <= sum_k |p_k| k!/(k-j)! (1 + |z|^{n-j}).
  std::vector<double> sup(spec.poly.size(), 0.0);
  for (double s : profile_points()) {
    for (std::size_t k = 0; k < sup.size(); ++k) {
      sup[k] = std::max(sup[k], std::abs(spec.poly[k].profile(s)));
    }
  }
  std::array<double, 4> g{};
  for (int j = 0; j < 4; ++j) {
    double acc = 0.0;
    for (std::size_t k = j; k < sup.size(); ++k) {
      acc += sup[k] * falling_factorial(static_cast<int>(k), j);
    }
    g[j] = acc;
  }
  return g;
}

double one_sided_lipschitz(const ReactionSpec& spec) {
  if (spec.m >= 1 && !(spec.leading_coefficient_inf() > 0.0)) {
    return std::numeric_limits<double>::infinity();
  }
  double best = -std::numeric_limits<double>::infinity();
  for (double s : profile_points()) {
    auto p = poly_on_profile(spec, s);
    if (spec.m == 0) {
      best = std::max(best, p[1]);
      continue;
    }
    // Critical points of b' lie within the Cauchy bound of b''.
    const double lead = std::abs(p.back());
    double bound = 0.0;
    for (std::size_t k = 0; k + 1 < p.size(); ++k) {
      bound = std::max(bound, std::abs(p[k]) / lead);
    }
    bound += 1.0;
    constexpr int n = 20000;
    for (int i = 0; i <= n; ++i) {
      double z = -bound + 2.0 * bound * i / n;
      best = std::max(best, horner_derivative(p, z, 1));
    }
  }
  return best;
}

std::vector<double> dissipativity_lattice() {
  std::vector<double> v{0.0};
  for (int i = -12; i <= 12; ++i) {
    double x = std::pow(10.0, i / 4.0);
    v.push_back(x);
    v.push_back(-x);
  }
  std::sort(v.begin(), v.end());
  return v;
}

DissipativityResult validate_dissipativity(const ReactionSpec& spec) {
  DissipativityResult result;
  auto structural = reaction_violations(spec);
  if (spec.m == 0 && structural.empty()) {
    result.accepted = true;
    result.vacuous = true;
    result.explanation = "m = 0: dissipativity is not required";
    return result;
  }
  if (!structural.empty()) {
    result.explanation = structural.front();
  }

  const int power = 2 * spec.m + 2;
  const double lead = spec.leading_coefficient_inf();
  // (x^n - y^n)(x - y) >= 2^{1-n} (x - y)^{n+1} for odd n gives the h-decay
  // rate; take half of it.
  const double a = lead > 0.0 ? 0.5 * lead * std::pow(2.0, -2.0 * spec.m) : 1.0;
  const double theta = static_cast<double>(power);

  const auto lattice = dissipativity_lattice();
  const auto xis = profile_points();
  std::vector<std::vector<double>> polys;
  for (double s : xis) polys.push_back(poly_on_profile(spec, s));

  // Required c over the inner (|z|,|h| <= 1e2) and full lattice. For a
  // dissipative b the requirement saturates; otherwise it keeps growing.
  double c_inner = 0.0;
  double c_full = 0.0;
  double worst_z = 0.0;
  double worst_h = 0.0;
  for (double z : lattice) {
    for (double h : lattice) {
      double d = -std::numeric_limits<double>::infinity();
      for (const auto& p : polys) {
        d = std::max(d, (horner_derivative(p, z + h, 0) - horner_derivative(p, z, 0)) * h);
      }
      const double need = (d + a * std::pow(h, power)) / (1.0 + std::pow(std::abs(z), theta));
      if (need > c_full) {
        c_full = need;
        worst_z = z;
        worst_h = h;
      }
      if (std::abs(z) <= 100.0 && std::abs(h) <= 100.0) c_inner = std::max(c_inner, need);
    }
  }
  result.worst_z = worst_z;
  result.worst_h = worst_h;
  const bool saturated = c_full <= c_inner * (1.0 + 1e-9) + 1e-12;
  if (!structural.empty() || !saturated) {
    std::ostringstream msg;
    if (structural.empty()) msg << "dissipativity fails: ";
    else msg << structural.front() << "; ";
    msg << "(b(z+h)-b(z))h + a h^" << power << " outgrows c(1+|z|^" << theta
        << ") at z = " << worst_z << ", h = " << worst_h;
    result.explanation = msg.str();
    return result;
  }
  result.accepted = true;
  result.certificate = {a, c_full * (1.0 + 1e-12), theta};
  result.explanation = "accepted";
  return result;
}

NemytskiiOperator::NemytskiiOperator(ReactionSpec spec, BasisPtr basis)
    : spec_(std::move(spec)), basis_(std::move(basis)) {
  const auto& ds = basis_->spec();
  const int grid = std::max(ds.grid, (2 * spec_.m + 2) * ds.modes);
  transform_ = &basis_->transform_for(grid);
  zero_ = spec_.is_zero();
  constant_coefficients_ = std::all_of(spec_.poly.begin(), spec_.poly.end(),
                                       [](const CosineSeries& c) { return c.is_constant(); });
  if (constant_coefficients_) {
    for (const auto& c : spec_.poly) constant_poly_.push_back(c.terms.empty() ? 0.0 : c.terms[0]);
    return;
  }
  const int n = transform_->axis_points();
  const int dim = ds.dimension;
  grid_poly_.resize(transform_->size());
  std::array<double, 3> xi{};
  for (std::size_t point = 0; point < transform_->size(); ++point) {
    std::size_t rem = point;
    for (int axis = dim - 1; axis >= 0; --axis) {
      xi[axis] = transform_->coordinate(static_cast<int>(rem % n));
      rem /= n;
    }
    auto& p = grid_poly_[point];
    for (const auto& c : spec_.poly) p.push_back(c(std::span<const double>(xi.data(), dim)));
  }
}

NemytskiiOperator::Workspace NemytskiiOperator::make_workspace() const {
  return {transform_->make_buffer(), transform_->make_buffer(), transform_->make_buffer()};
}

double NemytskiiOperator::b_at(std::size_t point, double z, int order) const {
  return constant_coefficients_ ? horner_derivative(constant_poly_, z, order)
                                : horner_derivative(grid_poly_[point], z, order);
}

void NemytskiiOperator::apply(std::span<const double> x, std::span<double> out,
                              Workspace& ws, AlignedBuffer* potential) const {
  if (zero_) {
    std::fill(out.begin(), out.end(), 0.0);
    if (potential) std::fill_n(potential->data(), potential->size(), 0.0);
    return;
  }
  transform_->synthesize(x, ws.values, ws.scratch);
  const std::size_t n = transform_->size();
  double* v = ws.values.data();
  double* w = ws.work.data();
  if (constant_coefficients_ && spec_.m == 1) {
    // Hot path for cubic reactions.
    const double p0 = constant_poly_[0], p1 = constant_poly_[1];
    const double p2 = constant_poly_[2], p3 = constant_poly_[3];
    if (potential) {
      double* pot = potential->data();
      for (std::size_t i = 0; i < n; ++i) {
        const double z = v[i];
        w[i] = ((p3 * z + p2) * z + p1) * z + p0;
        pot[i] = (3.0 * p3 * z + 2.0 * p2) * z + p1;
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const double z = v[i];
        w[i] = ((p3 * z + p2) * z + p1) * z + p0;
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double z = v[i];
      w[i] = b_at(i, z, 0);
      if (potential) potential->data()[i] = b_at(i, z, 1);
    }
  }
  transform_->analyze(ws.work, out, ws.scratch);
}

void NemytskiiOperator::multiply(const AlignedBuffer& potential, std::span<const double> y,
                                 std::span<double> out, Workspace& ws) const {
  transform_->synthesize(y, ws.values, ws.scratch);
  const std::size_t n = transform_->size();
  const double* pot = potential.data();
  double* v = ws.values.data();
  for (std::size_t i = 0; i < n; ++i) v[i] *= pot[i];
  transform_->analyze(ws.values, out, ws.scratch);
}

std::vector<double> NemytskiiOperator::derivative_on_grid(std::span<const double> x, int order,
                                                          Workspace& ws) const {
  if (order < 0 || order > 3) throw DomainError("b derivatives are available up to order 3");
  transform_->synthesize(x, ws.values, ws.scratch);
  std::vector<double> out(transform_->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = b_at(i, ws.values.data()[i], order);
  return out;
}

SpectralField nemytskii_apply(const ReactionSpec& spec, const SpectralField& x) {
  NemytskiiOperator op(spec, x.basis());
  auto ws = op.make_workspace();
  SpectralField out(x.basis());
  op.apply(x.coefficients(), out.coefficients(), ws);
  return out;
}

std::vector<double> nemytskii_potential(const ReactionSpec& spec, const SpectralField& x,
                                        int order) {
  NemytskiiOperator op(spec, x.basis());
  auto ws = op.make_workspace();
  return op.derivative_on_grid(x.coefficients(), order, ws);
}

}  // namespace spdelab
