#include "spdelab/spectral_field.hpp"

#include <algorithm>
#include <cmath>

#include "spdelab/error.hpp"

namespace spdelab {

namespace {

void require_same_basis(const SpectralField& a, const SpectralField& b) {
  if (a.size() != b.size() || a.basis()->spec() != b.basis()->spec()) {
    throw DomainError("fields live on different bases");
  }
}

// Maps full-grid index (M+1 per axis) to transform index, or -1 on a
// Dirichlet boundary point.
long full_to_transform(std::size_t full, int dim, int grid, bool dirichlet) {
  const int full_n = grid + 1;
  const int axis_n = dirichlet ? grid - 1 : grid + 1;
  long pos = 0;
  long stride = 1;
  for (int axis = dim - 1; axis >= 0; --axis) {
    int j = static_cast<int>(full % full_n);
    full /= full_n;
    int t = j;
    if (dirichlet) {
      if (j == 0 || j == grid) return -1;
      t = j - 1;
    }
    pos += t * stride;
    stride *= axis_n;
  }
  return pos;
}

std::size_t full_grid_size(int dim, int grid) {
  std::size_t n = 1;
  for (int i = 0; i < dim; ++i) n *= static_cast<std::size_t>(grid + 1);
  return n;
}

}  // namespace

SpectralField::SpectralField(BasisPtr basis)
    : basis_(std::move(basis)), coeffs_(basis_->size(), 0.0) {}

SpectralField::SpectralField(BasisPtr basis, std::vector<double> coefficients)
    : basis_(std::move(basis)), coeffs_(std::move(coefficients)) {
  if (coeffs_.size() != basis_->size()) {
    throw DomainError("coefficient count does not match the basis");
  }
}

SpectralField SpectralField::mode(BasisPtr basis, std::size_t flat, double amplitude) {
  SpectralField f(std::move(basis));
  if (flat >= f.size()) throw DomainError("mode index out of range");
  f.coeffs_[flat] = amplitude;
  return f;
}

SpectralField SpectralField::from_grid(BasisPtr basis,
                                       std::span<const double> values) {
  const auto& spec = basis->spec();
  const auto& tr = basis->transform();
  if (values.size() != full_grid_size(spec.dimension, spec.grid)) {
    throw DomainError("grid value count does not match (M+1)^d");
  }
  const bool dirichlet = spec.boundary == Boundary::Dirichlet;
  AlignedBuffer in = tr.make_buffer();
  AlignedBuffer scratch = tr.make_buffer();
  for (std::size_t i = 0; i < values.size(); ++i) {
    long t = full_to_transform(i, spec.dimension, spec.grid, dirichlet);
    if (t >= 0) in.data()[t] = values[i];
  }
  SpectralField f(std::move(basis));
  tr.analyze(in, f.coeffs_, scratch);
  return f;
}

bool SpectralField::is_finite() const noexcept {
  return std::all_of(coeffs_.begin(), coeffs_.end(),
                     [](double v) { return std::isfinite(v); });
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
  require_same_basis(*this, other);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
  require_same_basis(*this, other);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
  return *this;
}

SpectralField& SpectralField::operator*=(double c) {
  for (double& v : coeffs_) v *= c;
  return *this;
}

std::vector<double> grid_values(const SpectralField& field) {
  const auto& spec = field.basis()->spec();
  const auto& tr = field.basis()->transform();
  AlignedBuffer out = tr.make_buffer();
  AlignedBuffer scratch = tr.make_buffer();
  tr.synthesize(field.coefficients(), out, scratch);
  const bool dirichlet = spec.boundary == Boundary::Dirichlet;
  std::vector<double> full(full_grid_size(spec.dimension, spec.grid), 0.0);
  for (std::size_t i = 0; i < full.size(); ++i) {
    long t = full_to_transform(i, spec.dimension, spec.grid, dirichlet);
    if (t >= 0) full[i] = out.data()[t];
  }
  return full;
}

double sup_norm(const SpectralField& field) {
  // Boundary points of a Dirichlet field are zero, so the transform points
  // carry the maximum.
  const auto& tr = field.basis()->transform();
  AlignedBuffer out = tr.make_buffer();
  AlignedBuffer scratch = tr.make_buffer();
  tr.synthesize(field.coefficients(), out, scratch);
  double m = 0.0;
  for (double v : out.span()) m = std::max(m, std::abs(v));
  return m;
}

double inner(const SpectralField& x, const SpectralField& y) {
  require_same_basis(x, y);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

}  // namespace spdelab
