#pragma once

#include <stdexcept>
#include <string>

namespace spdelab {

/// Violated precondition on a mathematical argument (negative time, invalid
/// multi-index, undefined fractional power, ...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// A trajectory left the representable range. Carries where it happened.
class BlowUpError : public std::runtime_error {
public:
  BlowUpError(double time, double sup_norm);

  double time() const noexcept { return time_; }
  double sup_norm() const noexcept { return sup_norm_; }

private:
  double time_;
  double sup_norm_;
};

/// Invalid or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace spdelab
