#include "spdelab/time_grid.hpp"

#include <algorithm>
#include <cmath>

#include "spdelab/error.hpp"

namespace spdelab {

namespace {
constexpr double kRelTol = 1e-9;
}

TimeGrid TimeGrid::uniform(double dt, double horizon) {
  if (!(dt > 0.0) || !(horizon >= dt * (1.0 - kRelTol))) {
    throw DomainError("uniform time grid needs 0 < dt <= horizon");
  }
  TimeGrid g;
  g.append_uniform(dt, horizon);
  return g;
}

TimeGrid TimeGrid::graded(double t_min, double dt, double horizon, int steps_per_octave,
                          double switch_time, double late_dt) {
  if (!(t_min > 0.0) || !(dt >= t_min) || !(horizon >= dt) || steps_per_octave < 1) {
    throw DomainError("graded time grid needs 0 < t_min <= dt <= horizon");
  }
  TimeGrid g;
  g.append_step(t_min);
  const double octaves = std::log2(dt / t_min);
  const int n_geo = static_cast<int>(std::ceil(octaves * steps_per_octave - kRelTol));
  double prev = t_min;
  for (int i = 1; i <= n_geo; ++i) {
    const double t = i == n_geo ? dt : t_min * std::pow(dt / t_min, static_cast<double>(i) / n_geo);
    g.append_step(t - prev);
    prev = t;
  }
  if (late_dt > 0.0 && switch_time > g.horizon() && switch_time < horizon) {
    g.append_uniform(dt, switch_time);
    g.append_uniform(late_dt, horizon);
  } else {
    g.append_uniform(dt, horizon);
  }
  return g;
}

TimeGrid TimeGrid::through(std::vector<double> targets, double dt, double t_min,
                           double switch_time, double late_dt) {
  if (targets.empty()) throw DomainError("time grid needs at least one target time");
  std::sort(targets.begin(), targets.end());
  if (!(targets.front() > 0.0)) throw DomainError("target times must be positive");
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  const double horizon = targets.back();
  TimeGrid g;
  std::vector<double> breaks;
  if (t_min > 0.0 && t_min < dt) {
    // Geometric head with ratio sqrt(2) from t_min up to dt.
    for (double t = t_min; t < dt * (1.0 - kRelTol); t *= std::sqrt(2.0)) breaks.push_back(t);
    breaks.push_back(dt);
  }
  for (double t : targets) breaks.push_back(t);
  if (late_dt > 0.0 && switch_time > 0.0 && switch_time < horizon) breaks.push_back(switch_time);
  std::sort(breaks.begin(), breaks.end());
  for (double b : breaks) {
    if (b > horizon * (1.0 + kRelTol)) break;
    if (b <= g.horizon() + kRelTol * std::max(1.0, b)) continue;
    const bool head = t_min > 0.0 && b <= dt * (1.0 + kRelTol);
    if (head) {
      g.append_step(b - g.horizon());
      continue;
    }
    const bool late = late_dt > 0.0 && switch_time > 0.0 && g.horizon() >= switch_time * (1.0 - kRelTol);
    g.append_uniform(late ? late_dt : dt, b);
  }
  return g;
}

void TimeGrid::append_uniform(double dt, double until) {
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  const double start = horizon();
  const double span = until - start;
  if (span <= kRelTol * std::max(1.0, until)) return;
  auto count = static_cast<std::size_t>(std::floor(span / dt + kRelTol));
  if (count > 0) {
    segments_.push_back({start, dt, count});
    total_ += count;
  }
  const double rest = until - horizon();
  if (rest > kRelTol * std::max(1.0, until)) append_step(rest);
}

void TimeGrid::append_step(double dt) {
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  segments_.push_back({horizon(), dt, 1});
  ++total_;
}

double TimeGrid::horizon() const noexcept {
  if (segments_.empty()) return 0.0;
  const auto& s = segments_.back();
  return s.start + s.dt * static_cast<double>(s.count);
}

double TimeGrid::time(std::size_t i) const {
  if (i > total_) throw DomainError("time index beyond the grid");
  std::size_t seen = 0;
  for (const auto& s : segments_) {
    if (i <= seen + s.count) return s.start + s.dt * static_cast<double>(i - seen);
    seen += s.count;
  }
  return horizon();
}

std::size_t TimeGrid::index_of(double t) const {
  if (std::abs(t) <= kRelTol) return 0;
  std::size_t seen = 0;
  for (const auto& s : segments_) {
    const double end = s.start + s.dt * static_cast<double>(s.count);
    if (t <= end * (1.0 + kRelTol)) {
      const double x = (t - s.start) / s.dt;
      const double r = std::round(x);
      if (std::abs(s.start + r * s.dt - t) <= kRelTol * std::max(1.0, t) && r >= 0.0) {
        return seen + static_cast<std::size_t>(r);
      }
      throw DomainError("time " + std::to_string(t) + " is not on the time grid");
    }
    seen += s.count;
  }
  throw DomainError("time " + std::to_string(t) + " beyond the grid horizon");
}

std::vector<double> TimeGrid::times() const {
  std::vector<double> out{0.0};
  out.reserve(total_ + 1);
  for (const auto& s : segments_) {
    for (std::size_t i = 1; i <= s.count; ++i) out.push_back(s.start + s.dt * static_cast<double>(i));
  }
  return out;
}

double TimeGrid::max_step() const noexcept {
  double m = 0.0;
  for (const auto& s : segments_) m = std::max(m, s.dt);
  return m;
}

}  // namespace spdelab
