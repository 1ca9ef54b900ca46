#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spdelab/solver.hpp"
#include "spdelab/stats.hpp"
#include "spdelab/test_function.hpp"

namespace spdelab {

/// The SPDE being sampled: operator and noise (basis), reaction, time step.
struct Problem {
  BasisPtr basis;
  ReactionSpec reaction;
  SolverConfig solver;

  void validate() const;
  /// Text identifying everything that changes sample paths.
  std::string identity() const;
};

struct MonteCarloConfig {
  std::size_t paths = 10000;
  std::uint64_t seed = 1;
  /// Trajectory indices used are first_trajectory .. first_trajectory+paths-1.
  std::uint64_t first_trajectory = 0;
  std::size_t threads = 1;
  /// Smallest time node of the graded head used near t = 0.
  double t_min = 1e-6;
  /// After `late_switch` the step grows to `late_dt` (0 keeps solver.dt).
  double late_switch = 1.0;
  double late_dt = 0.0;
  /// Paths per work chunk. Fixed, so reductions do not depend on threads.
  std::size_t chunk = 64;
};

struct SemigroupEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
  double t = 0.0;
  std::uint64_t fingerprint = 0;
};

/// Per-path samples of several coupled quantities. Row p holds the samples of
/// path p; any linear combination of columns gets a paired standard error.
struct SampleMatrix {
  std::size_t paths = 0;
  std::size_t width = 0;
  std::vector<double> data;

  double at(std::size_t path, std::size_t column) const { return data[path * width + column]; }
  RunningStats column(std::size_t c) const;
  RunningStats combination(std::span<const double> weights) const;
};

struct QuadratureNode {
  double t = 0.0;
  double weight = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

struct ResolventEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double lambda = 0.0;
  double t_max = 0.0;
  std::vector<QuadratureNode> nodes;
  /// e^{-lambda t_max} ||f|| / lambda (times the gradient scale for Du).
  double tail_bound = 0.0;
  /// Estimated contribution of [0, t_min], which the gradient quadrature omits.
  double head_bound = 0.0;
  /// |Q_h - Q_2h| / 3 from the node means.
  double quadrature_error = 0.0;
  double total_error = 0.0;
  bool partial = false;
  std::uint64_t fingerprint = 0;
};

struct ResolventBudget {
  MonteCarloConfig mc;
  /// Target for total_error; larger errors flag the estimate as partial.
  double tolerance = 1e-2;
  /// Hard cap on the truncation horizon.
  double max_horizon = 50.0;
};

/// Truncation horizon t_max with e^{-lambda t_max} ||f|| / lambda <= tolerance / 10,
/// clamped to [1, max_horizon].
double resolvent_horizon(double lambda, double f_sup, const ResolventBudget& budget);

/// P(t) f(x) = E f(X(t, x)). Exact f(x) with zero error at t = 0.
SemigroupEstimate estimate_Pt(const Problem& problem, const TestFunction& f,
                              const SpectralField& x, double t, const MonteCarloConfig& mc);
std::vector<SemigroupEstimate> estimate_Pt_series(const Problem& problem, const TestFunction& f,
                                                  const SpectralField& x,
                                                  std::span<const double> times,
                                                  const MonteCarloConfig& mc);

/// D P(t) f(x) h = E[(f(X(t)) - f(x)) M_h(t ^ w) / (t ^ w)] where M_h is the
/// BEL weight of the tangent started at h and w the BEL window. The baseline
/// f(x) has zero correlation with M and only removes variance.
SemigroupEstimate bel_gradient(const Problem& problem, const TestFunction& f,
                               const SpectralField& x, const SpectralField& h, double t,
                               const MonteCarloConfig& mc);
std::vector<SemigroupEstimate> bel_gradient_series(const Problem& problem, const TestFunction& f,
                                                   const SpectralField& x,
                                                   const SpectralField& h,
                                                   std::span<const double> times,
                                                   const MonteCarloConfig& mc);

/// (P(t)f(x + eps h) - P(t)f(x - eps h)) / (2 eps) with both points on one
/// stream.
SemigroupEstimate fd_gradient(const Problem& problem, const TestFunction& f,
                              const SpectralField& x, const SpectralField& h, double t,
                              double eps, const MonteCarloConfig& mc);

/// D^2 P(t) f(x)(h, k) as the coupled central difference in k of the BEL
/// gradient in h.
SemigroupEstimate bel_second_difference(const Problem& problem, const TestFunction& f,
                                        const SpectralField& x, const SpectralField& h,
                                        const SpectralField& k, double t, double eps,
                                        const MonteCarloConfig& mc);

struct ProbePair {
  SpectralField x;
  SpectralField h;
};

struct DecayRow {
  double t = 0.0;
  double value = 0.0;  // max over probes of |D P(t) f(x) h|
  double std_error = 0.0;
  std::size_t probe = 0;
  std::vector<SemigroupEstimate> per_probe;
};

struct DecayProbeResult {
  std::vector<DecayRow> rows;
  LinearFit fit;       // log value against log t
  double constant = 0.0;  // smallest C with value <= C t^{predicted_slope}
  double predicted_slope = 0.0;
};

/// Table of sup over probes of |D P(t) f(x) h| on t_grid with a log-log fit.
/// `predicted_slope` is -(1 - a)(1 + gamma)/2 with a the exponent of f.
DecayProbeResult goku_decay_probe(const Problem& problem, const TestFunction& f,
                                  std::span<const double> t_grid,
                                  std::span<const ProbePair> probes, const MonteCarloConfig& mc);

/// u(x) = R(lambda) f(x) = int_0^inf e^{-lambda t} P(t) f(x) dt by pathwise
/// trapezoidal quadrature on the time grid, truncated at t_max.
ResolventEstimate resolvent(const Problem& problem, const TestFunction& f, const SpectralField& x,
                            double lambda, const ResolventBudget& budget);

/// D u(x) h = int_0^inf e^{-lambda t} D P(t) f(x) h dt, integrating the BEL
/// gradient on the graded grid from t_min.
ResolventEstimate resolvent_gradient(const Problem& problem, const TestFunction& f,
                                     const SpectralField& x, const SpectralField& h,
                                     double lambda, const ResolventBudget& budget);

/// What a stencil evaluates at each of its points.
enum class StencilQuantity { Value, Gradient };

struct StencilRequest {
  std::vector<SpectralField> points;
  /// Gradient direction (Gradient quantity only).
  std::optional<SpectralField> direction;
  StencilQuantity quantity = StencilQuantity::Value;
};

struct StencilResult {
  SampleMatrix samples;  // one column per stencil point
  /// Deterministic error bounds shared by all points (tail, head, quadrature).
  double deterministic_error = 0.0;
  std::vector<QuadratureNode> nodes;  // for point 0
  std::uint64_t fingerprint = 0;
};

/// Resolvent values or gradients at all stencil points on one noise stream.
StencilResult resolvent_stencil(const Problem& problem, const TestFunction& f,
                                const StencilRequest& request, double lambda,
                                const ResolventBudget& budget);

/// v(t, x) = P(t) f(x) + int_0^t P(t - s) g(s, .)(x) ds.
SemigroupEstimate evolution_mild(const Problem& problem, const TestFunction& f,
                                 const SourceTerm& g, double t, const SpectralField& x,
                                 const ResolventBudget& budget);

/// v(t, .) values or gradients at all stencil points on one noise stream.
/// `include_initial` = false gives the v_2 part (f ignored).
StencilResult evolution_stencil(const Problem& problem, const TestFunction& f,
                                const SourceTerm& g, double t, bool include_initial,
                                const StencilRequest& request, const ResolventBudget& budget);

/// Closed forms for F = 0, d = 1, f = cos(<x, e_1>) (mode 0, scale 1):
/// P(t) f(x) = exp(-s2(t)/2) cos(e^{-lambda_1 t} x_1) with
/// s2(t) = lambda_1^{-gamma} (1 - e^{-2 lambda_1 t}) / (2 lambda_1).
namespace ou {
double variance(double lambda, double gamma, double t);
double value(double x1, double lambda, double gamma, double t);
double gradient(double x1, double lambda, double gamma, double t);
double second_derivative(double x1, double lambda, double gamma, double t);
}  // namespace ou

}  // namespace spdelab
