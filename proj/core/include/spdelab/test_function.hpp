#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spdelab/spectral_field.hpp"

namespace spdelab {

enum class TestKind { Smooth, Lipschitz, Holder, Rough };

/// Scalar profiles phi with closed-form sup-norm and seminorms.
///   cosine: cos z                       smooth
///   tanh:   tanh z                      smooth
///   clamp:  max(-1, min(1, z))          Lipschitz, [phi]_Lip = 1
///   power:  sign(z) min(1,|z|)^alpha    alpha-Hoelder, [phi]_alpha = 2^{1-alpha}
///   ramp:   clamp(z / width)            bounded, discontinuous as width -> 0
enum class Profile { Cosine, Tanh, Clamp, Power, Ramp };

std::string_view to_string(Profile p);
Profile parse_profile(std::string_view name);

/// Cylindrical test function f(x) = sum_{k in modes} phi(scale * <x, e_k>).
struct TestFunction {
  Profile profile = Profile::Cosine;
  std::vector<std::size_t> modes{0};
  double scale = 1.0;
  double alpha = 1.0;        // Power only
  double ramp_width = 1e-8;  // Ramp only

  static TestFunction cosine(std::vector<std::size_t> modes, double scale = 1.0);
  static TestFunction smooth(std::vector<std::size_t> modes, double scale = 1.0);
  static TestFunction lipschitz(std::vector<std::size_t> modes, double scale = 1.0);
  static TestFunction holder(double alpha, std::vector<std::size_t> modes, double scale = 1.0);
  static TestFunction rough(std::vector<std::size_t> modes, double scale = 1.0,
                            double width = 1e-8);

  TestKind kind() const;
  /// Exact Hoelder exponent of phi: 1 for smooth and Lipschitz, alpha for
  /// power, 0 for ramp.
  double exponent() const;

  double phi(double z) const;
  double operator()(std::span<const double> coefficients) const;
  double operator()(const SpectralField& x) const { return (*this)(x.coefficients()); }

  double sup_norm() const;
  /// Seminorm of f on E with the sup-norm, from
  /// |<x - y, e_k>| <= ||e_k||_{L1} ||x - y||_inf.
  double holder_seminorm(const SpectralBasis& basis) const;
  double lipschitz_constant(const SpectralBasis& basis) const;

  void check(const SpectralBasis& basis) const;
};

/// g(s, x) = (c0 + c1 cos(omega s)) f(x): a time-indexed test-function family
/// for the evolution problem.
struct SourceTerm {
  TestFunction f;
  double c0 = 1.0;
  double c1 = 0.0;
  double omega = 0.0;

  double amplitude(double s) const;
  double operator()(double s, std::span<const double> coefficients) const {
    return amplitude(s) * f(coefficients);
  }
  bool is_zero() const { return c0 == 0.0 && c1 == 0.0; }
};

/// Dyadic-ish ladder of 1-d mode numbers 1, 2, 3, 4, 6, 8, 11, 16, ... up to K,
/// returned as flat indices along the first axis.
std::vector<std::size_t> mode_ladder(const SpectralBasis& basis);

/// e_k / ||e_k||_inf, a unit direction in E along one eigenfunction.
SpectralField unit_mode(const BasisPtr& basis, std::size_t flat);

}  // namespace spdelab
