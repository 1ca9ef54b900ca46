#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spdelab/semigroup.hpp"

namespace spdelab {

/// Evaluates a target at every point of a stencil. For gradient targets `h`
/// is the direction the gradient is paired with. Columns of the returned
/// samples follow `points`.
using StencilEvaluator =
    std::function<StencilResult(const std::vector<SpectralField>& points, const SpectralField& h)>;

/// Wraps a noiseless closed-form target x -> value.
StencilEvaluator deterministic_target(std::function<double(const SpectralField&)> target);

enum class SecondDifference { Forward, Centered, Both };
std::string_view to_string(SecondDifference s);

struct ScaleRow {
  double r = 0.0;
  double statistic = 0.0;  // max over probes of |difference|
  double std_error = 0.0;  // of the maximizing probe
  std::size_t probe = 0;
  bool masked = false;
  std::vector<double> per_probe;
  std::vector<double> per_probe_se;
  /// Second differences only: whether the probe's value came from the centered form.
  std::vector<bool> per_probe_centered;
};

enum class Verdict { Pass, Fail, Inconclusive };
std::string_view to_string(Verdict v);

struct RegularityReport {
  std::string name;
  std::string target;   // "u", "Du", "v2", "Dv2", or a caller label
  int order = 1;        // 1: first differences, 2: second differences
  SecondDifference second = SecondDifference::Both;
  std::vector<ScaleRow> scales;
  LinearFit fit;
  /// Reported exponent = fitted slope - slope_offset.
  double slope_offset = 0.0;
  double exponent = 0.0;
  double ci95 = 0.0;
  double r2 = 0.0;
  double predicted = 0.0;
  double tolerance = 0.15;
  double min_r2 = 0.9;
  Verdict verdict = Verdict::Inconclusive;
  std::size_t samples = 0;
  std::uint64_t fingerprint = 0;
  /// Largest deterministic (quadrature, tail, head) error among the stencils.
  double deterministic_error = 0.0;
};

struct ProfileOptions {
  double predicted = 1.0;
  double slope_offset = 0.0;
  double tolerance = 0.15;
  double min_r2 = 0.9;
  /// Scales whose 4 x stderr exceeds mask_ratio x statistic are excluded.
  double mask_ratio = 0.25;
  std::size_t min_scales = 3;
  /// Second-difference stencils: forward x, x + rh, x + 2rh; centered
  /// x - rh, x, x + rh; or both, keeping the larger per probe. Both are
  /// members of the sup defining the seminorm. A cusp at x cancels in the
  /// forward form when the target is even about x, and in the centered
  /// form when it is odd.
  SecondDifference second = SecondDifference::Both;
  std::string name;
  std::string target;
};

/// Default dyadic scales 2^-1 .. 2^-7.
std::vector<double> dyadic_scales(int first = 1, int last = 7);

/// Statistic of |target(x + r h) - target(x)| per scale, fitted against r.
RegularityReport holder_profile(const StencilEvaluator& target, std::span<const double> scales,
                                std::span<const ProbePair> probes, const ProfileOptions& options);

/// Statistic of second differences |target(y + 2rh) - 2 target(y + rh) + target(y)|
/// per scale, with y = x (forward) and/or y = x - rh (centered).
RegularityReport zygmund_profile(const StencilEvaluator& target, std::span<const double> scales,
                                 std::span<const ProbePair> probes, const ProfileOptions& options);

/// Recomputes mask, fit and verdict from the per-scale rows.
void finalize(RegularityReport& report, double mask_ratio, std::size_t min_scales);

struct SchauderPlan {
  double gamma = 0.0;
  std::optional<double> alpha;
  /// beta = alpha + 2 / (1 + gamma).
  double beta = 0.0;
  std::string target;  // "u" or "Du"
  int order = 1;
  double predicted = 0.0;
  double slope_offset = 0.0;
  std::string statement;
};

/// Which seminorm carries the prediction for (gamma, alpha): first or second
/// differences of u or Du, and the exponent they should show.
SchauderPlan schauder_plan(double gamma, std::optional<double> alpha);

struct SchauderBudget {
  ResolventBudget resolvent;
  double lambda = 1.0;
  std::vector<double> scales = dyadic_scales();
  bool stationary = true;
  bool evolution = false;
  double evolution_time = 1.0;
  double tolerance = 0.15;
  double min_r2 = 0.9;
  double mask_ratio = 0.25;
  /// Scale of the test-function profile, f = sum phi(scale * x_k).
  double profile_scale = 1.0;
};

struct SchauderBundle {
  SchauderPlan plan;
  std::vector<RegularityReport> reports;
  bool partial = false;
  std::string note;
};

/// Probe set: base point 0 and the unit directions e_k / ||e_k||_inf along
/// the mode ladder.
std::vector<ProbePair> ladder_probes(const BasisPtr& basis);

/// Measures the predicted regularity of u = R(lambda) f (and of v_2(t, .)
/// for the evolution problem with g = f) with f rough (alpha absent) or
/// alpha-Hoelder along the mode ladder.
SchauderBundle verify_schauder(const DomainSpec& domain, std::optional<double> alpha,
                               const ReactionSpec& reaction, const SolverConfig& solver,
                               const SchauderBudget& budget);

/// JSON text of a report and a per-scale CSV.
std::string to_json(const RegularityReport& report);
std::string to_csv(const RegularityReport& report);

}  // namespace spdelab
