#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "spdelab/spectral_basis.hpp"

namespace spdelab {

/// Coordinates of one trajectory's noise. Draws are a pure function of
/// (seed, trajectory, step, mode), see `stream_normals`, so two streams with
/// equal seed and trajectory produce identical increments wherever they run.
struct NoiseStream {
  std::uint64_t seed = 0;
  std::uint64_t trajectory = 0;
  std::uint64_t step = 0;
};

/// The two standard normals (z0, z1) attached to `mode` at `step`.
///
/// Philox4x32-10 is called with key = (seed mod 2^32, seed >> 32) and
/// counter = (mode / 2, step, trajectory mod 2^32, trajectory >> 32). Output
/// words (w0, w1) serve even modes and (w2, w3) odd modes; each pair becomes
/// u1 = (w + 0.5) 2^-32, u2 = w' 2^-32 and Box-Muller gives
/// z0 = r cos(2 pi u2), z1 = r sin(2 pi u2) with r = sqrt(-2 ln u1).
std::array<double, 2> stream_normals(std::uint64_t seed, std::uint64_t trajectory,
                                     std::uint64_t step, std::size_t mode);

/// Batched form for modes 0..z0.size()-1 at the stream's current step.
void stream_normals(const NoiseStream& stream, std::span<double> z0,
                    std::span<double> z1);

/// Batched form for an arbitrary mode subset; z0[i], z1[i] belong to modes[i].
void stream_normals(const NoiseStream& stream, std::span<const std::size_t> modes,
                    std::span<double> z0, std::span<double> z1);

/// Brownian increments Delta beta_k ~ N(0, dt) for modes 0..modes-1; these
/// are sqrt(dt) z0. Advances the stream by one step.
std::vector<double> wiener_increments(NoiseStream& stream, double dt, std::size_t modes);

/// Var of the exact per-mode convolution increment
/// eta = int_0^dt e^{-lambda (dt - s)} lambda^{-gamma/2} d beta(s),
/// i.e. lambda^{-gamma} (1 - e^{-2 lambda dt}) / (2 lambda); dt when lambda = 0.
double convolution_variance(double lambda, double gamma, double dt);

/// Cov(eta, Delta beta) = lambda^{-gamma/2} (1 - e^{-lambda dt}) / lambda.
double convolution_covariance(double lambda, double gamma, double dt);

/// Per-mode constants of one exact step of size dt. The increment of mode k
/// is eta_k = dw_gain_k z0 + resid_gain_k z1, jointly Gaussian with the
/// Brownian increment sqrt(dt) z0 with the exact covariance.
struct StepCoefficients {
  double dt = 0.0;
  std::vector<double> decay;       // e^{-lambda dt}
  std::vector<double> variance;    // Var eta
  std::vector<double> dw_gain;
  std::vector<double> resid_gain;
  std::vector<double> bel_gain;    // dt / Var eta

  static StepCoefficients make(const SpectralBasis& basis, double dt);
};

/// Per-mode values of the stochastic convolution W_A(t).
struct ConvolutionState {
  std::vector<double> w;
  double time = 0.0;

  static ConvolutionState zero(const SpectralBasis& basis);
};

/// w_k <- e^{-lambda_k dt} w_k + eta_k with eta drawn from the same z0 that
/// `wiener_increments` turns into Delta beta. Advances the stream.
ConvolutionState convolution_step(const ConvolutionState& state, double dt,
                                  const SpectralBasis& basis, NoiseStream& stream);

}  // namespace spdelab
