#pragma once

#include <cstddef>
#include <vector>

namespace spdelab {

/// A piecewise-uniform partition of [0, horizon]. Steps inside a segment are
/// bit-identical, so per-step constants can be cached per segment.
class TimeGrid {
public:
  struct Segment {
    double start;
    double dt;
    std::size_t count;
  };

  TimeGrid() = default;

  /// Uniform steps of size dt; a shorter final step lands on the horizon.
  static TimeGrid uniform(double dt, double horizon);

  /// First step [0, t_min], geometric refinement up to step size dt, then
  /// uniform dt up to `switch_time`, then uniform `late_dt` to the horizon.
  /// Pass late_dt <= 0 to keep dt throughout.
  static TimeGrid graded(double t_min, double dt, double horizon,
                         int steps_per_octave = 2, double switch_time = 0.0,
                         double late_dt = 0.0);

  /// Graded head as in `graded` (pass t_min <= 0 to start uniformly), then
  /// step dt up to `switch_time` and late_dt after it, with every target time
  /// landing exactly on a grid node. Horizon is the largest target.
  static TimeGrid through(std::vector<double> targets, double dt, double t_min = 0.0,
                          double switch_time = 0.0, double late_dt = 0.0);
  /// Appends uniform steps of size dt up to `until` (last step may be short).
  void append_uniform(double dt, double until);
  void append_step(double dt);

  std::size_t steps() const noexcept { return total_; }
  double horizon() const noexcept;
  const std::vector<Segment>& segments() const noexcept { return segments_; }

  /// Time after `i` steps.
  double time(std::size_t i) const;
  /// Step index whose end time equals t (relative tolerance 1e-9); throws if
  /// t is not a grid time.
  std::size_t index_of(double t) const;
  /// All grid times t_0 = 0, ..., t_N.
  std::vector<double> times() const;
  /// Largest step size.
  double max_step() const noexcept;

private:
  std::vector<Segment> segments_;
  std::size_t total_ = 0;
};

}  // namespace spdelab
