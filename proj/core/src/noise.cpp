#include "spdelab/noise.hpp"

#include <cmath>
#include <numbers>

#include "spdelab/error.hpp"
#include "spdelab/philox.hpp"

namespace spdelab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kInv32 = 1.0 / 4294967296.0;

inline Philox4x32::Counter counter_for(std::uint64_t trajectory, std::uint64_t step,
                                       std::size_t pair) {
  return {static_cast<std::uint32_t>(pair), static_cast<std::uint32_t>(step),
          static_cast<std::uint32_t>(trajectory),
          static_cast<std::uint32_t>(trajectory >> 32)};
}

inline Philox4x32::Key key_for(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

inline void box_muller(std::uint32_t a, std::uint32_t b, double& z0, double& z1) {
  const double u1 = (static_cast<double>(a) + 0.5) * kInv32;
  const double u2 = static_cast<double>(b) * kInv32;
  const double r = std::sqrt(-2.0 * std::log(u1));
  z0 = r * std::cos(kTwoPi * u2);
  z1 = r * std::sin(kTwoPi * u2);
}

}  // namespace

std::array<double, 2> stream_normals(std::uint64_t seed, std::uint64_t trajectory,
                                     std::uint64_t step, std::size_t mode) {
  auto w = Philox4x32::generate(counter_for(trajectory, step, mode / 2), key_for(seed));
  std::array<double, 2> z{};
  if (mode % 2 == 0) {
    box_muller(w[0], w[1], z[0], z[1]);
  } else {
    box_muller(w[2], w[3], z[0], z[1]);
  }
  return z;
}

void stream_normals(const NoiseStream& stream, std::span<double> z0,
                    std::span<double> z1) {
  const auto key = key_for(stream.seed);
  const std::size_t n = z0.size();
  for (std::size_t pair = 0; 2 * pair < n; ++pair) {
    auto w = Philox4x32::generate(counter_for(stream.trajectory, stream.step, pair), key);
    box_muller(w[0], w[1], z0[2 * pair], z1[2 * pair]);
    if (2 * pair + 1 < n) box_muller(w[2], w[3], z0[2 * pair + 1], z1[2 * pair + 1]);
  }
}

void stream_normals(const NoiseStream& stream, std::span<const std::size_t> modes,
                    std::span<double> z0, std::span<double> z1) {
  for (std::size_t i = 0; i < modes.size(); ++i) {
    auto z = stream_normals(stream.seed, stream.trajectory, stream.step, modes[i]);
    z0[i] = z[0];
    z1[i] = z[1];
  }
}

std::vector<double> wiener_increments(NoiseStream& stream, double dt, std::size_t modes) {
  if (!(dt > 0.0)) throw DomainError("Wiener increments need dt > 0");
  std::vector<double> z0(modes), z1(modes);
  stream_normals(stream, z0, z1);
  const double s = std::sqrt(dt);
  for (double& v : z0) v *= s;
  ++stream.step;
  return z0;
}

double convolution_variance(double lambda, double gamma, double dt) {
  if (lambda == 0.0) {
    if (gamma != 0.0) throw DomainError("zero eigenvalue with gamma > 0");
    return dt;
  }
  return std::pow(lambda, -gamma) * (-std::expm1(-2.0 * lambda * dt)) / (2.0 * lambda);
}

double convolution_covariance(double lambda, double gamma, double dt) {
  if (lambda == 0.0) {
    if (gamma != 0.0) throw DomainError("zero eigenvalue with gamma > 0");
    return dt;
  }
  return std::pow(lambda, -gamma / 2.0) * (-std::expm1(-lambda * dt)) / lambda;
}

StepCoefficients StepCoefficients::make(const SpectralBasis& basis, double dt) {
  if (!(dt > 0.0)) throw DomainError("step size must be positive");
  const double gamma = basis.spec().gamma;
  const std::size_t n = basis.size();
  StepCoefficients c;
  c.dt = dt;
  c.decay.resize(n);
  c.variance.resize(n);
  c.dw_gain.resize(n);
  c.resid_gain.resize(n);
  c.bel_gain.resize(n);
  const double sqrt_dt = std::sqrt(dt);
  for (std::size_t k = 0; k < n; ++k) {
    const double lambda = basis.eigenvalue(k);
    const double v = convolution_variance(lambda, gamma, dt);
    const double cov = convolution_covariance(lambda, gamma, dt);
    c.decay[k] = std::exp(-lambda * dt);
    c.variance[k] = v;
    c.dw_gain[k] = cov / sqrt_dt;
    c.resid_gain[k] = std::sqrt(std::max(0.0, v - cov * cov / dt));
    c.bel_gain[k] = dt / v;
  }
  return c;
}

ConvolutionState ConvolutionState::zero(const SpectralBasis& basis) {
  return {std::vector<double>(basis.size(), 0.0), 0.0};
}

ConvolutionState convolution_step(const ConvolutionState& state, double dt,
                                  const SpectralBasis& basis, NoiseStream& stream) {
  if (!(dt > 0.0)) throw DomainError("convolution step needs dt > 0");
  if (state.w.size() != basis.size()) throw DomainError("state size mismatch");
  const auto coeff = StepCoefficients::make(basis, dt);
  std::vector<double> z0(basis.size()), z1(basis.size());
  stream_normals(stream, z0, z1);
  ConvolutionState next{state.w, state.time + dt};
  for (std::size_t k = 0; k < next.w.size(); ++k) {
    next.w[k] = coeff.decay[k] * next.w[k] + coeff.dw_gain[k] * z0[k] +
                coeff.resid_gain[k] * z1[k];
  }
  ++stream.step;
  return next;
}

}  // namespace spdelab
