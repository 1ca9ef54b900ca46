#include "spdelab/solver.hpp"

#include <algorithm>
#include <cmath>

#include "spdelab/error.hpp"
#include "spdelab/stats.hpp"

namespace spdelab {

void validate(const SolverConfig& config, const SpectralBasis& basis) {
  if (!(config.dt > 0.0) || !(config.dt <= config.horizon)) {
    throw DomainError("solver needs 0 < dt <= horizon");
  }
  if (config.dt * basis.largest_eigenvalue() > SolverConfig::kMaxStiffness) {
    throw DomainError("dt * lambda_max exceeds 50; exponential factors underflow");
  }
  if (!(config.bel_window > 0.0)) throw DomainError("BEL window must be positive");
}

TrajectoryState TrajectoryState::start(const SpectralField& x0,
                                       std::span<const SpectralField> directions) {
  TrajectoryState s{0.0, x0, {}, {}};
  for (const auto& h : directions) s.tangents.push_back(h);
  s.bel.assign(directions.size(), 0.0);
  return s;
}

bool TrajectoryState::is_finite() const {
  if (!x.is_finite()) return false;
  for (const auto& t : tangents) {
    if (!t.is_finite()) return false;
  }
  return std::all_of(bel.begin(), bel.end(), [](double v) { return std::isfinite(v); });
}

MildSolver::MildSolver(BasisPtr basis, ReactionSpec reaction, SolverConfig config)
    : basis_(std::move(basis)),
      config_(config),
      nemytskii_(std::move(reaction), basis_),
      ws_(nemytskii_.make_workspace()),
      potential_(nemytskii_.transform().make_buffer()),
      drift_(basis_->size(), 0.0),
      z0_(basis_->size(), 0.0),
      z1_(basis_->size(), 0.0) {}

void MildSolver::restrict_modes(std::vector<std::size_t> modes) {
  if (!nemytskii_.is_zero()) {
    throw DomainError("mode restriction is only exact when the reaction vanishes");
  }
  for (auto k : modes) {
    if (k >= basis_->size()) throw DomainError("restricted mode out of range");
  }
  std::sort(modes.begin(), modes.end());
  modes.erase(std::unique(modes.begin(), modes.end()), modes.end());
  subset_ = std::move(modes);
}

const StepCoefficients& MildSolver::coefficients(double dt) const {
  auto it = coeff_cache_.find(dt);
  if (it != coeff_cache_.end()) return *it->second;
  if (coeff_cache_.size() > 4096) coeff_cache_.clear();
  auto c = std::make_unique<StepCoefficients>(StepCoefficients::make(*basis_, dt));
  return *coeff_cache_.emplace(dt, std::move(c)).first->second;
}

void MildSolver::draw_noise(const NoiseStream& stream, const StepCoefficients& c,
                            StepNoise& out) const {
  out.active = config_.noise;
  if (!out.active) return;
  const std::size_t n = basis_->size();
  out.eta.assign(n, 0.0);
  out.dw.assign(n, 0.0);
  const double sqrt_dt = std::sqrt(c.dt);
  auto& z0 = const_cast<std::vector<double>&>(z0_);
  auto& z1 = const_cast<std::vector<double>&>(z1_);
  if (subset_.empty()) {
    stream_normals(stream, z0, z1);
    for (std::size_t k = 0; k < n; ++k) {
      out.eta[k] = c.dw_gain[k] * z0[k] + c.resid_gain[k] * z1[k];
      out.dw[k] = sqrt_dt * z0[k];
    }
  } else {
    stream_normals(stream, subset_, std::span(z0.data(), subset_.size()),
                   std::span(z1.data(), subset_.size()));
    for (std::size_t i = 0; i < subset_.size(); ++i) {
      const std::size_t k = subset_[i];
      out.eta[k] = c.dw_gain[k] * z0[i] + c.resid_gain[k] * z1[i];
      out.dw[k] = sqrt_dt * z0[i];
    }
  }
}

void MildSolver::check_blowup(const TrajectoryState& s, double grid_sup) const {
  if (!(grid_sup <= config_.blowup_threshold)) {
    throw BlowUpError(s.time, grid_sup);
  }
}

void MildSolver::advance(std::span<TrajectoryState> states, const StepCoefficients& c,
                         const StepNoise& noise) {
  const std::size_t n = basis_->size();
  const double dt = c.dt;
  const bool nonlinear = !nemytskii_.is_zero();
  const std::size_t* modes = subset_.empty() ? nullptr : subset_.data();
  const std::size_t n_active = subset_.empty() ? n : subset_.size();

  for (auto& s : states) {
    const bool tangent_live =
        !s.tangents.empty() && s.time + dt <= config_.bel_window * (1.0 + 1e-12);
    const std::size_t dirs = tangent_live ? s.tangents.size() : 0;
    if (nonlinear) {
      nemytskii_.apply(s.x.coefficients(), drift_, ws_, dirs > 0 ? &potential_ : nullptr);
      double grid_sup = 0.0;
      for (double v : ws_.values.span()) grid_sup = std::max(grid_sup, std::abs(v));
      check_blowup(s, grid_sup);
      if (tangent_drift_.size() < dirs * n) tangent_drift_.resize(dirs * n);
      for (std::size_t i = 0; i < dirs; ++i) {
        nemytskii_.multiply(potential_, s.tangents[i].coefficients(),
                            std::span(tangent_drift_.data() + i * n, n), ws_);
      }
    }

    auto x = s.x.coefficients();
    for (std::size_t a = 0; a < n_active; ++a) {
      const std::size_t k = modes ? modes[a] : a;
      double v = x[k];
      if (nonlinear) v += dt * drift_[k];
      v *= c.decay[k];
      if (noise.active) v += noise.eta[k];
      x[k] = v;
    }
    for (std::size_t i = 0; i < dirs; ++i) {
      auto xi = s.tangents[i].coefficients();
      const double* g = nonlinear ? tangent_drift_.data() + i * n : nullptr;
      double acc = 0.0;
      for (std::size_t a = 0; a < n_active; ++a) {
        const std::size_t k = modes ? modes[a] : a;
        double v = xi[k];
        if (g) v += dt * g[k];
        v *= c.decay[k];
        xi[k] = v;
        if (noise.active) acc += c.bel_gain[k] * v * noise.eta[k];
      }
      s.bel[i] += acc;
    }
    s.time += dt;
    if (!nonlinear && !s.x.is_finite()) throw BlowUpError(s.time, HUGE_VAL);
  }
}

void MildSolver::step_in_place(TrajectoryState& state, double dt, NoiseStream& stream) {
  const auto& c = coefficients(dt);
  StepNoise noise;
  draw_noise(stream, c, noise);
  advance(std::span(&state, 1), c, noise);
  ++stream.step;
}

TrajectoryState MildSolver::step(const TrajectoryState& state, NoiseStream& stream) {
  TrajectoryState next = state;
  step_in_place(next, config_.dt, stream);
  return next;
}

std::pair<TrajectoryState, TrajectoryState> run_pair(MildSolver& solver, const SpectralField& x,
                                                     const SpectralField& y,
                                                     const TimeGrid& grid, NoiseStream stream) {
  std::vector<TrajectoryState> states{TrajectoryState::start(x), TrajectoryState::start(y)};
  solver.run(std::span(states), grid, stream, [](std::size_t, auto) {});
  return {std::move(states[0]), std::move(states[1])};
}

BoundProbeResult dissipative_bound_probe(BasisPtr basis, const ReactionSpec& reaction,
                                         const SolverConfig& config,
                                         std::span<const double> t_grid,
                                         std::span<const SpectralField> probes,
                                         std::uint64_t seed) {
  if (reaction.m < 1) {
    throw DomainError("the supremum bound probe needs m >= 1 (F must be superlinear)");
  }
  if (!validate_dissipativity(reaction).accepted) {
    throw DomainError("the supremum bound probe needs a dissipative reaction");
  }
  if (t_grid.empty() || probes.empty()) throw DomainError("probe needs times and initial data");
  std::vector<double> targets(t_grid.begin(), t_grid.end());
  std::sort(targets.begin(), targets.end());
  if (!(targets.front() > 0.0)) throw DomainError("probe times must be positive");

  double amplitude = 0.0;
  std::vector<double> amps;
  for (const auto& p : probes) {
    amps.push_back(sup_norm(p));
    amplitude = std::max(amplitude, amps.back());
  }
  // Deterministic step schedule: the explicit reaction needs
  // dt |b'(X)| small, and |b'| ~ A^{2m} initially, ~ 1/t later.
  const auto growth = growth_constants(reaction);
  const double stiff0 = std::max(1.0, growth[1] * std::pow(amplitude, 2 * reaction.m));
  TimeGrid grid;
  double t = 0.0;
  for (double target : targets) {
    while (target - t > 1e-12 * std::max(1.0, target)) {
      double h = std::max(0.1 / stiff0, 0.05 * t);
      h = std::min({h, config.dt, target - t});
      grid.append_step(h);
      t = grid.horizon();
    }
  }

  SolverConfig cfg = config;
  cfg.horizon = grid.horizon();
  MildSolver solver(basis, reaction, cfg);
  BoundProbeResult result;
  result.predicted_exponent = 1.0 / (2.0 * reaction.m);
  for (double target : targets) {
    result.rows.push_back({target, amps, std::vector<double>(probes.size(), 0.0), 0.0});
  }
  std::vector<std::size_t> row_of_step(grid.steps() + 1, SIZE_MAX);
  for (std::size_t r = 0; r < targets.size(); ++r) row_of_step[grid.index_of(targets[r])] = r;

  for (std::size_t p = 0; p < probes.size(); ++p) {
    std::vector<TrajectoryState> state{TrajectoryState::start(probes[p])};
    solver.run(std::span(state), grid, NoiseStream{seed, p, 0},
               [&](std::size_t index, std::span<const TrajectoryState> s) {
                 const std::size_t r = row_of_step[index];
                 if (r != SIZE_MAX) result.rows[r].sup_norms[p] = sup_norm(s[0].x);
               });
  }
  std::vector<double> lx, ly;
  for (auto& row : result.rows) {
    row.max_sup_norm = *std::max_element(row.sup_norms.begin(), row.sup_norms.end());
    lx.push_back(std::log(row.t));
    ly.push_back(std::log(row.max_sup_norm));
  }
  if (lx.size() >= 2) result.fitted_exponent = -ols_fit(lx, ly).slope;
  return result;
}

}  // namespace spdelab
