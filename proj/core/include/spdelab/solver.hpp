#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "spdelab/noise.hpp"
#include "spdelab/reaction.hpp"
#include "spdelab/spectral_field.hpp"
#include "spdelab/time_grid.hpp"

namespace spdelab {

struct SolverConfig {
  double dt = 1e-3;
  double horizon = 1.0;
  std::size_t directions = 0;
  bool noise = true;
  /// The BEL accumulator only integrates over [0, bel_window]; past it the
  /// tangent is no longer needed and is frozen.
  double bel_window = 1.0;
  double blowup_threshold = 1e6;
  /// Largest admissible lambda_max * dt.
  static constexpr double kMaxStiffness = 50.0;
};

/// Throws DomainError unless 0 < dt <= horizon and dt * lambda_max <= 50.
void validate(const SolverConfig& config, const SpectralBasis& basis);

/// Primal path, tangent paths D X(t,x) h_i and the BEL accumulators
///   M_i(t) = sum_n dt_n <Var(eta_n)^{-1} D X(t_{n+1}) h_i, eta_n>,
/// which is the exact Gaussian integration-by-parts weight of the discrete
/// chain and tends to int_0^t <(-A)^{gamma/2} D X(s) h_i, dW(s)> as dt -> 0.
struct TrajectoryState {
  double time = 0.0;
  SpectralField x;
  std::vector<SpectralField> tangents;
  std::vector<double> bel;

  static TrajectoryState start(const SpectralField& x0,
                               std::span<const SpectralField> directions = {});
  bool is_finite() const;
};

/// The Gaussian increments of one step shared by every coupled trajectory:
/// eta_k, and (for diagnostics) the Brownian increments Delta beta_k.
struct StepNoise {
  std::vector<double> eta;
  std::vector<double> dw;
  bool active = false;
};

/// Exponential Euler integrator for the mild formulation
///   X_{n+1} = e^{A dt} (X_n + dt P_K F(X_n)) + eta_n
/// with eta_n the exact stochastic-convolution increment, and the tangent
///   J_{n+1} h = e^{A dt} (J_n h + dt P_K (b'(X_n) J_n h)),
/// which is the exact Jacobian of the discrete map.
class MildSolver {
public:
  MildSolver(BasisPtr basis, ReactionSpec reaction, SolverConfig config);

  const SpectralBasis& basis() const noexcept { return *basis_; }
  const BasisPtr& basis_ptr() const noexcept { return basis_; }
  const SolverConfig& config() const noexcept { return config_; }
  const NemytskiiOperator& reaction() const noexcept { return nemytskii_; }

  /// Restricts stepping to a subset of modes. Only allowed when F == 0, where
  /// modes evolve independently; coefficients outside the subset are left as
  /// they are. Draws are indexed by mode, so the simulated modes are
  /// bit-identical to a full run.
  void restrict_modes(std::vector<std::size_t> modes);
  bool restricted() const noexcept { return !subset_.empty(); }

  /// Coefficients of one step of size dt (cached).
  const StepCoefficients& coefficients(double dt) const;

  /// Draws the step's increments from `stream` (does not advance it).
  void draw_noise(const NoiseStream& stream, const StepCoefficients& c, StepNoise& out) const;

  /// One step of size dt for a set of coupled states sharing `noise`.
  void advance(std::span<TrajectoryState> states, const StepCoefficients& c,
               const StepNoise& noise);

  /// One step of size config().dt from `stream`, which is advanced.
  TrajectoryState step(const TrajectoryState& state, NoiseStream& stream);
  void step_in_place(TrajectoryState& state, double dt, NoiseStream& stream);

  /// Integrates to the horizon on `grid`; `observer(step_index, state)` is
  /// called at t = 0 and after each step.
  template <class Observer>
  void run(std::span<TrajectoryState> states, const TimeGrid& grid, NoiseStream stream,
           Observer&& observer);

private:
  void check_blowup(const TrajectoryState& s, double grid_sup) const;

  BasisPtr basis_;
  SolverConfig config_;
  NemytskiiOperator nemytskii_;
  std::vector<std::size_t> subset_;
  mutable std::map<double, std::unique_ptr<StepCoefficients>> coeff_cache_;
  // Per-solver scratch; a solver instance is used by one thread at a time.
  NemytskiiOperator::Workspace ws_;
  AlignedBuffer potential_;
  std::vector<double> drift_;
  std::vector<double> tangent_drift_;
  std::vector<double> z0_, z1_;
};

template <class Observer>
void MildSolver::run(std::span<TrajectoryState> states, const TimeGrid& grid,
                     NoiseStream stream, Observer&& observer) {
  StepNoise noise;
  std::size_t index = 0;
  observer(index, std::span<const TrajectoryState>(states));
  for (const auto& seg : grid.segments()) {
    const auto& c = coefficients(seg.dt);
    for (std::size_t i = 0; i < seg.count; ++i) {
      draw_noise(stream, c, noise);
      advance(states, c, noise);
      ++stream.step;
      ++index;
      observer(index, std::span<const TrajectoryState>(states));
    }
  }
}

/// Endpoints of two trajectories from x and y driven by the same stream.
std::pair<TrajectoryState, TrajectoryState> run_pair(MildSolver& solver, const SpectralField& x,
                                                     const SpectralField& y,
                                                     const TimeGrid& grid, NoiseStream stream);

struct BoundProbeRow {
  double t;
  std::vector<double> amplitudes;  // sup-norm of each probe initial datum
  std::vector<double> sup_norms;   // ||X(t, x)|| per probe
  double max_sup_norm;
};

struct BoundProbeResult {
  std::vector<BoundProbeRow> rows;
  /// p in max_x ||X(t,x)|| ~ t^{-p}, fitted on the log grid.
  double fitted_exponent = 0.0;
  double predicted_exponent = 0.0;  // 1 / (2m)
};

/// Table of sup over probe initial data of ||X(t, x)|| on a log-spaced t grid,
/// for the supremum bound k(t) t^{-1/(2m)}. Requires m >= 1 and a dissipative
/// reaction.
BoundProbeResult dissipative_bound_probe(BasisPtr basis, const ReactionSpec& reaction,
                                         const SolverConfig& config,
                                         std::span<const double> t_grid,
                                         std::span<const SpectralField> probes,
                                         std::uint64_t seed);

}  // namespace spdelab
