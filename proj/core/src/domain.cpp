#include "spdelab/domain.hpp"

#include <cmath>
#include <sstream>

#include "spdelab/error.hpp"

namespace spdelab {

std::string_view to_string(Boundary bc) {
  return bc == Boundary::Dirichlet ? "dirichlet" : "neumann";
}

Boundary parse_boundary(std::string_view name) {
  if (name == "dirichlet" || name == "Dirichlet") return Boundary::Dirichlet;
  if (name == "neumann" || name == "Neumann") return Boundary::Neumann;
  throw ConfigError("unknown boundary condition '" + std::string(name) + "'");
}

double dirichlet_cube_gamma_threshold(int dimension) {
  return (dimension - 2) / 2.0;
}

std::vector<std::string> domain_violations(const DomainSpec& spec) {
  std::vector<std::string> out;
  if (spec.dimension < 1 || spec.dimension > 3) {
    out.push_back("dimension must be 1, 2 or 3");
  }
  if (!(spec.gamma >= 0.0 && spec.gamma <= 1.0)) {
    out.push_back("noise color gamma must lie in [0, 1]");
  }
  if (spec.modes < 1) out.push_back("mode cutoff K must be at least 1");
  if (spec.grid < 4 * spec.modes) {
    out.push_back("grid resolution M must be at least 4K");
  }
  if (spec.boundary == Boundary::Dirichlet && spec.dimension >= 2 &&
      spec.dimension <= 3) {
    double threshold = dirichlet_cube_gamma_threshold(spec.dimension);
    if (!(spec.gamma > threshold)) {
      std::ostringstream msg;
      msg << "Dirichlet cube in dimension " << spec.dimension
          << " requires gamma > " << threshold
          << " for a continuous stochastic convolution";
      out.push_back(msg.str());
    }
  }
  if (spec.boundary == Boundary::Neumann) {
    if (spec.gamma != 0.0) {
      out.push_back(
          "Neumann boundary requires gamma = 0: (-A)^{-gamma/2} is undefined "
          "on the constant mode");
    }
    if (spec.dimension >= 2) {
      out.push_back(
          "Neumann boundary with gamma = 0 is white noise, which is not "
          "admissible for dimension >= 2");
    }
  }
  return out;
}

void validate(const DomainSpec& spec) {
  auto violations = domain_violations(spec);
  if (violations.empty()) return;
  std::string msg = "inadmissible domain:";
  for (const auto& v : violations) msg += "\n  - " + v;
  throw DomainError(msg);
}

double eigenvalue(std::span<const int> k, const DomainSpec& spec) {
  if (static_cast<int>(k.size()) != spec.dimension) {
    throw DomainError("multi-index rank does not match the domain dimension");
  }
  int lo = spec.boundary == Boundary::Dirichlet ? 1 : 0;
  int hi = lo + spec.modes - 1;
  double lambda = 0.0;
  for (int ki : k) {
    if (ki < lo || ki > hi) {
      throw DomainError("mode index " + std::to_string(ki) +
                        " outside the retained range");
    }
    lambda += static_cast<double>(ki) * ki;
  }
  return lambda;
}

double heat_multiplier(double t, std::span<const int> k,
                       const DomainSpec& spec) {
  if (!(t >= 0.0)) throw DomainError("heat multiplier needs t >= 0");
  return std::exp(-eigenvalue(k, spec) * t);
}

double color_multiplier(std::span<const int> k, const DomainSpec& spec) {
  double lambda = eigenvalue(k, spec);
  if (spec.gamma == 0.0) return 1.0;
  if (lambda == 0.0) {
    throw DomainError(
        "(-A)^{-gamma/2} is undefined on a zero eigenvalue with gamma > 0");
  }
  return std::pow(lambda, -spec.gamma / 2.0);
}

}  // namespace spdelab
