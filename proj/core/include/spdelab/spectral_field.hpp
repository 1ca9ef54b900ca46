#pragma once

#include <span>
#include <vector>

#include "spdelab/spectral_basis.hpp"

namespace spdelab {

/// A state x in E stored as its first K^d eigen-coefficients a_k = <x, e_k>.
class SpectralField {
public:
  explicit SpectralField(BasisPtr basis);
  SpectralField(BasisPtr basis, std::vector<double> coefficients);

  /// amplitude * e_k for the flat mode index.
  static SpectralField mode(BasisPtr basis, std::size_t flat, double amplitude = 1.0);
  /// Projection of point values on the full (M+1)^d grid onto the basis.
  static SpectralField from_grid(BasisPtr basis, std::span<const double> grid_values);

  const BasisPtr& basis() const noexcept { return basis_; }
  std::span<const double> coefficients() const noexcept { return coeffs_; }
  std::span<double> coefficients() noexcept { return coeffs_; }
  std::size_t size() const noexcept { return coeffs_.size(); }
  double operator[](std::size_t i) const { return coeffs_[i]; }
  double& operator[](std::size_t i) { return coeffs_[i]; }

  bool is_finite() const noexcept;

  SpectralField& operator+=(const SpectralField& other);
  SpectralField& operator-=(const SpectralField& other);
  SpectralField& operator*=(double c);

  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double c, SpectralField a) { return a *= c; }
  friend SpectralField operator*(SpectralField a, double c) { return a *= c; }

  bool operator==(const SpectralField& other) const { return coeffs_ == other.coeffs_; }

private:
  BasisPtr basis_;
  std::vector<double> coeffs_;
};

/// Point values on the full uniform grid, (M+1)^d entries, row-major with the
/// last axis fastest. Dirichlet fields are exactly zero on boundary points.
std::vector<double> grid_values(const SpectralField& field);

/// Maximum of |x| over the (M+1)^d grid.
double sup_norm(const SpectralField& field);

/// <x, y> in L2.
double inner(const SpectralField& x, const SpectralField& y);

}  // namespace spdelab
