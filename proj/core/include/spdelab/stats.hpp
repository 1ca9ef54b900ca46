#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace spdelab {

/// Welford accumulator. Merging is order-dependent in the last bits, so
/// reductions that must be reproducible merge in a fixed order.
class RunningStats {
public:
  void add(double x) noexcept {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }

  void merge(const RunningStats& o) noexcept {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double n = static_cast<double>(n_ + o.n_);
    const double delta = o.mean_ - mean_;
    mean_ += delta * static_cast<double>(o.n_) / n;
    m2_ += o.m2_ + delta * delta * static_cast<double>(n_) * static_cast<double>(o.n_) / n;
    n_ += o.n_;
  }

  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double stddev() const noexcept { return std::sqrt(variance()); }
  double stderr_mean() const noexcept {
    return n_ > 0 ? stddev() / std::sqrt(static_cast<double>(n_)) : 0.0;
  }

private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_stderr = 0.0;
  /// Half-width of the 95% confidence interval of the slope (Student t).
  double slope_ci95 = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = intercept + slope * x.
LinearFit ols_fit(std::span<const double> x, std::span<const double> y);

/// Two-sided 97.5% Student-t quantile with `dof` degrees of freedom.
double student_t_975(std::size_t dof);

}  // namespace spdelab
