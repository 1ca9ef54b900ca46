#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spdelab {

enum class Boundary { Dirichlet, Neumann };

std::string_view to_string(Boundary bc);
Boundary parse_boundary(std::string_view name);

/// The discretized operator A = Laplacian on [0, pi]^d together with the noise
/// color. Modes are indexed per axis by 1..K (Dirichlet) or 0..K-1 (Neumann);
/// `grid` is the number of grid intervals per axis used for pointwise
/// evaluation, grid points sit at j*pi/grid for j = 0..grid.
struct DomainSpec {
  int dimension = 1;
  Boundary boundary = Boundary::Dirichlet;
  double gamma = 0.0;
  int modes = 16;
  int grid = 64;

  bool operator==(const DomainSpec&) const = default;
};

/// Every clause of the domain hypotheses that `spec` violates, as readable
/// sentences. Empty means admissible.
std::vector<std::string> domain_violations(const DomainSpec& spec);

/// Throws DomainError listing all violations.
void validate(const DomainSpec& spec);

/// Smallest admissible noise color on the Dirichlet cube of dimension d:
/// gamma must exceed (d - 2) / 2.
double dirichlet_cube_gamma_threshold(int dimension);

/// lambda_k = sum_i k_i^2, the (sign-flipped) eigenvalue of A for mode k.
double eigenvalue(std::span<const int> k, const DomainSpec& spec);

/// exp(-lambda_k t), the action of e^{tA} on mode k.
double heat_multiplier(double t, std::span<const int> k, const DomainSpec& spec);

/// lambda_k^{-gamma/2}, the action of (-A)^{-gamma/2} on mode k.
double color_multiplier(std::span<const int> k, const DomainSpec& spec);

}  // namespace spdelab
