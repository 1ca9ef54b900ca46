#include "spdelab/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <set>

#include "spdelab/error.hpp"
#include "spdelab/fingerprint.hpp"
#include "spdelab/parallel.hpp"

namespace spdelab {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string mc_identity(const MonteCarloConfig& mc) {
  return "paths=" + std::to_string(mc.paths) + ";seed=" + std::to_string(mc.seed) +
         ";first=" + std::to_string(mc.first_trajectory) + ";tmin=" + num(mc.t_min) +
         ";switch=" + num(mc.late_switch) + ";late=" + num(mc.late_dt) +
         ";chunk=" + std::to_string(mc.chunk);
}

std::string function_identity(const TestFunction& f) {
  std::string s = std::string(to_string(f.profile)) + ":" + num(f.scale) + ":" + num(f.alpha) +
                  ":" + num(f.ramp_width) + ":";
  for (auto k : f.modes) s += std::to_string(k) + ",";
  return s;
}

std::uint64_t fingerprint_of(const Problem& p, const MonteCarloConfig& mc, const std::string& extra) {
  return fnv1a(p.identity() + "|" + mc_identity(mc) + "|" + extra);
}

using Visitor =
    std::function<void(std::size_t index, double t, std::span<const TrajectoryState>, double* row)>;
using NodeValue = std::function<double(std::size_t index, double t, std::span<const TrajectoryState>)>;

struct Job {
  const Problem* problem = nullptr;
  std::vector<SpectralField> starts;
  std::vector<SpectralField> directions;
  TimeGrid grid;
  std::size_t width = 0;
  Visitor visit;
  NodeValue node_value;  // optional per-node statistic of the first start point
  std::vector<std::size_t> active_modes;
};

struct JobResult {
  SampleMatrix samples;
  std::vector<RunningStats> nodes;
};

// Modes that influence any observed quantity when F == 0.
std::vector<std::size_t> active_modes(const Problem& p, const std::vector<std::size_t>& observed,
                                      const std::vector<SpectralField>& directions) {
  if (!p.reaction.is_zero()) return {};
  std::set<std::size_t> s(observed.begin(), observed.end());
  for (const auto& h : directions) {
    for (std::size_t k = 0; k < h.size(); ++k) {
      if (h[k] != 0.0) s.insert(k);
    }
  }
  return {s.begin(), s.end()};
}

JobResult run_job(const Job& job, const MonteCarloConfig& mc) {
  const Problem& problem = *job.problem;
  if (mc.paths == 0) throw DomainError("Monte Carlo needs at least one path");
  const std::size_t chunk = std::max<std::size_t>(1, mc.chunk);
  const std::size_t n_chunks = (mc.paths + chunk - 1) / chunk;
  const auto times = job.grid.times();

  JobResult result;
  result.samples.paths = mc.paths;
  result.samples.width = job.width;
  result.samples.data.assign(mc.paths * job.width, 0.0);
  std::vector<std::vector<RunningStats>> chunk_nodes(job.node_value ? n_chunks : 0);

  SolverConfig cfg = problem.solver;
  cfg.horizon = std::max(cfg.dt, job.grid.horizon());

  parallel_chunks(n_chunks, mc.threads, [&](std::size_t c, std::size_t) {
    MildSolver solver(problem.basis, problem.reaction, cfg);
    if (!job.active_modes.empty()) solver.restrict_modes(job.active_modes);
    std::vector<RunningStats>* nodes = nullptr;
    if (job.node_value) {
      chunk_nodes[c].assign(times.size(), RunningStats{});
      nodes = &chunk_nodes[c];
    }
    std::vector<TrajectoryState> states;
    const std::size_t end = std::min(mc.paths, (c + 1) * chunk);
    for (std::size_t p = c * chunk; p < end; ++p) {
      states.clear();
      for (const auto& x : job.starts) states.push_back(TrajectoryState::start(x, job.directions));
      double* row = result.samples.data.data() + p * job.width;
      NoiseStream stream{mc.seed, mc.first_trajectory + p, 0};
      solver.run(std::span(states), job.grid, stream,
                 [&](std::size_t index, std::span<const TrajectoryState> s) {
                   const double t = times[index];
                   job.visit(index, t, s, row);
                   if (nodes) (*nodes)[index].add(job.node_value(index, t, s));
                 });
    }
  });

  if (job.node_value) {
    result.nodes.assign(times.size(), RunningStats{});
    for (const auto& cn : chunk_nodes) {
      for (std::size_t i = 0; i < cn.size(); ++i) result.nodes[i].merge(cn[i]);
    }
  }
  return result;
}

// Largest grid time at which the tangent is still integrated.
double window_time(const std::vector<double>& times, double window) {
  double w = 0.0;
  for (double t : times) {
    if (t <= window * (1.0 + 1e-12)) w = t;
  }
  return w;
}

std::vector<double> trapezoid_weights(const std::vector<double>& t, std::size_t first) {
  std::vector<double> w(t.size(), 0.0);
  if (t.size() < first + 2) return w;
  for (std::size_t i = first; i + 1 < t.size(); ++i) {
    const double h = t[i + 1] - t[i];
    w[i] += 0.5 * h;
    w[i + 1] += 0.5 * h;
  }
  return w;
}

// Trapezoid on every other node (plus the last) of [first, end).
double coarse_trapezoid(const std::vector<double>& t, const std::vector<double>& g,
                        std::size_t first) {
  std::vector<std::size_t> idx;
  for (std::size_t i = first; i < t.size(); i += 2) idx.push_back(i);
  if (idx.back() != t.size() - 1) idx.push_back(t.size() - 1);
  double q = 0.0;
  for (std::size_t j = 0; j + 1 < idx.size(); ++j) {
    q += 0.5 * (t[idx[j + 1]] - t[idx[j]]) * (g[idx[j]] + g[idx[j + 1]]);
  }
  return q;
}

SemigroupEstimate to_estimate(const RunningStats& s, double t, std::uint64_t fp, double scale = 1.0) {
  return {scale * s.mean(), std::abs(scale) * s.stderr_mean(), s.count(), t, fp};
}

std::vector<long> index_map(const TimeGrid& grid, std::span<const double> targets) {
  std::vector<long> map(grid.steps() + 1, -1);
  for (std::size_t j = 0; j < targets.size(); ++j) map[grid.index_of(targets[j])] = static_cast<long>(j);
  return map;
}

double decay_power(const Problem& p, const TestFunction& f) {
  return (1.0 - f.exponent()) * (1.0 + p.basis->spec().gamma) / 2.0;
}

std::vector<double> positive_targets(std::span<const double> times) {
  std::vector<double> out;
  for (double t : times) {
    if (t < 0.0) throw DomainError("semigroup times must be non-negative");
    if (t > 0.0) out.push_back(t);
  }
  return out;
}

// Shared pathwise-quadrature engine for the resolvent and the evolution
// problem. The integrand at node n of point i is
//   a(t_n) * q_i(t_n),  q = f(X) for values, (f(X) - f(x)) M / tau for gradients,
// plus an optional terminal term at the last node.
struct QuadratureSpec {
  const TestFunction* integrand = nullptr;
  std::function<double(double)> kernel;  // a(t)
  const TestFunction* terminal = nullptr;
  double horizon = 0.0;
};

struct QuadratureOutcome {
  StencilResult stencil;
  double quadrature_error = 0.0;
  double head_bound = 0.0;
  double first_node_scale = 0.0;
  double late_node_max = 0.0;
};

QuadratureOutcome run_quadrature(const Problem& problem, const StencilRequest& request,
                                 const QuadratureSpec& q, const MonteCarloConfig& mc,
                                 const std::string& tag) {
  problem.validate();
  q.integrand->check(*problem.basis);
  if (request.points.empty()) throw DomainError("stencil needs at least one point");
  const bool gradient = request.quantity == StencilQuantity::Gradient;
  if (gradient && !request.direction) throw DomainError("gradient stencil needs a direction");

  Job job;
  job.problem = &problem;
  job.starts = request.points;
  if (gradient) job.directions = {*request.direction};
  job.grid = TimeGrid::through({q.horizon}, problem.solver.dt, mc.t_min, mc.late_switch, mc.late_dt);
  const auto times = job.grid.times();
  const std::size_t first = gradient ? 1 : 0;
  const auto weights = trapezoid_weights(times, first);
  std::vector<double> kw(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) kw[i] = weights[i] * q.kernel(times[i]);
  const double tau_w = window_time(times, problem.solver.bel_window);
  const std::size_t n_pts = request.points.size();
  job.width = n_pts;

  std::vector<std::size_t> observed = q.integrand->modes;
  if (q.terminal) observed.insert(observed.end(), q.terminal->modes.begin(), q.terminal->modes.end());
  job.active_modes = active_modes(problem, observed, job.directions);

  // One baseline for the whole stencil: per-point baselines would leave
  // (f(x_i) - f(x_0)) M in every difference, which does not shrink with the
  // spacing when f is rough.
  const double base_integrand = (*q.integrand)(request.points[0]);
  const double base_terminal = q.terminal ? (*q.terminal)(request.points[0]) : 0.0;
  const std::size_t last = times.size() - 1;

  auto sample = [&](const TestFunction& fn, double base, const TrajectoryState& s, double t) {
    const double v = fn(s.x);
    if (!gradient) return v;
    const double tau = std::min(t, tau_w);
    return (v - base) * s.bel[0] / tau;
  };

  job.visit = [&](std::size_t index, double t, std::span<const TrajectoryState> s, double* row) {
    if (index < first) return;
    for (std::size_t i = 0; i < n_pts; ++i) {
      if (kw[index] != 0.0) row[i] += kw[index] * sample(*q.integrand, base_integrand, s[i], t);
      if (q.terminal && index == last) row[i] += sample(*q.terminal, base_terminal, s[i], t);
    }
  };
  job.node_value = [&](std::size_t index, double t, std::span<const TrajectoryState> s) {
    if (index < first) return 0.0;
    return sample(*q.integrand, base_integrand, s[0], t);
  };

  auto run = run_job(job, mc);
  QuadratureOutcome out;
  out.stencil.samples = std::move(run.samples);
  out.stencil.fingerprint = fingerprint_of(problem, mc, tag);

  std::vector<double> g(times.size(), 0.0);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto& st = run.nodes[i];
    g[i] = q.kernel(times[i]) * st.mean();
    if (i >= first) {
      out.stencil.nodes.push_back({times[i], kw[i], st.mean(), st.stderr_mean(), st.count()});
    }
  }
  double fine = 0.0;
  for (std::size_t i = first; i < times.size(); ++i) fine += weights[i] * g[i];
  out.quadrature_error = std::abs(fine - coarse_trapezoid(times, g, first)) / 3.0;

  if (gradient) {
    const double p = decay_power(problem, *q.integrand);
    const auto& n1 = run.nodes[first];
    out.first_node_scale = std::abs(n1.mean()) + 2.0 * n1.stderr_mean();
    out.head_bound = p < 1.0 ? out.first_node_scale * times[first] / (1.0 - p)
                             : std::numeric_limits<double>::infinity();
  }
  for (std::size_t i = first; i < times.size(); ++i) {
    if (times[i] >= 0.5 * q.horizon) {
      out.late_node_max = std::max(out.late_node_max,
                                   std::abs(run.nodes[i].mean()) + 2.0 * run.nodes[i].stderr_mean());
    }
  }
  return out;
}

}  // namespace

void Problem::validate() const {
  if (!basis) throw DomainError("problem has no basis");
  spdelab::validate(basis->spec());
  auto issues = reaction_violations(reaction);
  if (!issues.empty()) throw DomainError(issues.front());
  spdelab::validate(solver, *basis);
}

std::string Problem::identity() const {
  const auto& s = basis->spec();
  std::string id = "d=" + std::to_string(s.dimension) + ";bc=" + std::string(to_string(s.boundary)) +
                   ";gamma=" + num(s.gamma) + ";K=" + std::to_string(s.modes) +
                   ";M=" + std::to_string(s.grid) + ";m=" + std::to_string(reaction.m) + ";b=";
  for (const auto& c : reaction.poly) {
    for (double v : c.terms) id += num(v) + ",";
    id += "/";
  }
  id += ";dt=" + num(solver.dt) + ";window=" + num(solver.bel_window) +
        ";noise=" + (solver.noise ? "1" : "0");
  return id;
}

RunningStats SampleMatrix::column(std::size_t c) const {
  RunningStats s;
  for (std::size_t p = 0; p < paths; ++p) s.add(at(p, c));
  return s;
}

RunningStats SampleMatrix::combination(std::span<const double> weights) const {
  if (weights.size() != width) throw DomainError("combination weights do not match the columns");
  RunningStats s;
  for (std::size_t p = 0; p < paths; ++p) {
    double v = 0.0;
    for (std::size_t c = 0; c < width; ++c) {
      if (weights[c] != 0.0) v += weights[c] * at(p, c);
    }
    s.add(v);
  }
  return s;
}

double resolvent_horizon(double lambda, double f_sup, const ResolventBudget& budget) {
  if (!(lambda > 0.0)) throw DomainError("resolvent needs lambda > 0");
  if (!(budget.tolerance > 0.0)) throw DomainError("resolvent tolerance must be positive");
  const double t = std::log(10.0 * std::max(f_sup, 1e-300) / (lambda * budget.tolerance)) / lambda;
  return std::clamp(t, 1.0, budget.max_horizon);
}

std::vector<SemigroupEstimate> estimate_Pt_series(const Problem& problem, const TestFunction& f,
                                                  const SpectralField& x,
                                                  std::span<const double> times,
                                                  const MonteCarloConfig& mc) {
  problem.validate();
  f.check(*problem.basis);
  const auto fp = fingerprint_of(problem, mc, "Pt|" + function_identity(f));
  const auto targets = positive_targets(times);
  std::vector<SemigroupEstimate> out;
  if (!targets.empty()) {
    Job job;
    job.problem = &problem;
    job.starts = {x};
    job.grid = TimeGrid::through(targets, problem.solver.dt, 0.0, mc.late_switch, mc.late_dt);
    job.width = targets.size();
    job.active_modes = active_modes(problem, f.modes, {});
    const auto map = index_map(job.grid, targets);
    job.visit = [&](std::size_t index, double, std::span<const TrajectoryState> s, double* row) {
      if (map[index] >= 0) row[map[index]] = f(s[0].x);
    };
    auto run = run_job(job, mc);
    for (std::size_t j = 0; j < targets.size(); ++j) {
      out.push_back(to_estimate(run.samples.column(j), targets[j], fp));
    }
  }
  std::vector<SemigroupEstimate> ordered;
  std::size_t j = 0;
  for (double t : times) {
    if (t == 0.0) ordered.push_back({f(x), 0.0, 0, 0.0, fp});
    else ordered.push_back(out[j++]);
  }
  return ordered;
}

SemigroupEstimate estimate_Pt(const Problem& problem, const TestFunction& f,
                              const SpectralField& x, double t, const MonteCarloConfig& mc) {
  const double times[] = {t};
  return estimate_Pt_series(problem, f, x, times, mc).front();
}

namespace {

// Gradient samples of every start point at every target time, all on one
// stream: column j * starts + i.
SampleMatrix gradient_samples(const Problem& problem, const TestFunction& f,
                              const std::vector<SpectralField>& starts,
                              const std::vector<SpectralField>& directions,
                              std::span<const double> targets, const MonteCarloConfig& mc) {
  problem.validate();
  f.check(*problem.basis);
  Job job;
  job.problem = &problem;
  job.starts = starts;
  job.directions = directions;
  job.grid = TimeGrid::through({targets.begin(), targets.end()}, problem.solver.dt, mc.t_min,
                               mc.late_switch, mc.late_dt);
  const auto times = job.grid.times();
  const double tau_w = window_time(times, problem.solver.bel_window);
  const std::size_t n_s = starts.size(), n_d = directions.size();
  job.width = targets.size() * n_s * n_d;
  job.active_modes = active_modes(problem, f.modes, directions);
  // Shared baseline, as in run_quadrature.
  const double base = f(starts[0]);
  const auto map = index_map(job.grid, targets);
  job.visit = [&](std::size_t index, double t, std::span<const TrajectoryState> s, double* row) {
    if (map[index] < 0) return;
    const double tau = std::min(t, tau_w);
    const std::size_t j = static_cast<std::size_t>(map[index]);
    for (std::size_t i = 0; i < n_s; ++i) {
      const double diff = f(s[i].x) - base;
      for (std::size_t d = 0; d < n_d; ++d) {
        row[(j * n_s + i) * n_d + d] = diff * s[i].bel[d] / tau;
      }
    }
  };
  return run_job(job, mc).samples;
}

}  // namespace

std::vector<SemigroupEstimate> bel_gradient_series(const Problem& problem, const TestFunction& f,
                                                   const SpectralField& x,
                                                   const SpectralField& h,
                                                   std::span<const double> times,
                                                   const MonteCarloConfig& mc) {
  for (double t : times) {
    if (!(t > 0.0)) throw DomainError("BEL gradient needs t > 0");
  }
  const auto fp = fingerprint_of(problem, mc, "bel|" + function_identity(f));
  auto samples = gradient_samples(problem, f, {x}, {h}, times, mc);
  std::vector<SemigroupEstimate> out;
  for (std::size_t j = 0; j < times.size(); ++j) {
    out.push_back(to_estimate(samples.column(j), times[j], fp));
  }
  return out;
}

SemigroupEstimate bel_gradient(const Problem& problem, const TestFunction& f,
                               const SpectralField& x, const SpectralField& h, double t,
                               const MonteCarloConfig& mc) {
  const double times[] = {t};
  return bel_gradient_series(problem, f, x, h, times, mc).front();
}

SemigroupEstimate fd_gradient(const Problem& problem, const TestFunction& f,
                              const SpectralField& x, const SpectralField& h, double t,
                              double eps, const MonteCarloConfig& mc) {
  if (!(t > 0.0)) throw DomainError("finite-difference gradient needs t > 0");
  if (!(eps > 0.0)) throw DomainError("finite-difference step must be positive");
  problem.validate();
  f.check(*problem.basis);
  Job job;
  job.problem = &problem;
  job.starts = {x + eps * h, x - eps * h};
  job.grid = TimeGrid::through({t}, problem.solver.dt, 0.0, mc.late_switch, mc.late_dt);
  job.width = 2;
  job.active_modes = active_modes(problem, f.modes, {});
  const std::size_t last = job.grid.steps();
  job.visit = [&](std::size_t index, double, std::span<const TrajectoryState> s, double* row) {
    if (index != last) return;
    row[0] = f(s[0].x);
    row[1] = f(s[1].x);
  };
  auto samples = run_job(job, mc).samples;
  const double w[] = {1.0 / (2.0 * eps), -1.0 / (2.0 * eps)};
  return to_estimate(samples.combination(w), t,
                     fingerprint_of(problem, mc, "fd|" + num(eps) + "|" + function_identity(f)));
}

SemigroupEstimate bel_second_difference(const Problem& problem, const TestFunction& f,
                                        const SpectralField& x, const SpectralField& h,
                                        const SpectralField& k, double t, double eps,
                                        const MonteCarloConfig& mc) {
  if (!(t > 0.0)) throw DomainError("BEL second difference needs t > 0");
  if (!(eps > 0.0 && eps <= 1e-2)) throw DomainError("second-difference step must lie in (0, 1e-2]");
  const double times[] = {t};
  auto samples = gradient_samples(problem, f, {x + eps * k, x - eps * k}, {h}, times, mc);
  const double w[] = {1.0 / (2.0 * eps), -1.0 / (2.0 * eps)};
  return to_estimate(samples.combination(w), t,
                     fingerprint_of(problem, mc, "bel2|" + num(eps) + "|" + function_identity(f)));
}

DecayProbeResult goku_decay_probe(const Problem& problem, const TestFunction& f,
                                  std::span<const double> t_grid,
                                  std::span<const ProbePair> probes, const MonteCarloConfig& mc) {
  if (t_grid.size() < 2) throw DomainError("decay probe needs at least two times");
  for (double t : t_grid) {
    if (!(t > 0.0 && t <= 1.0)) throw DomainError("decay probe times must lie in (0, 1]");
  }
  if (probes.empty()) throw DomainError("decay probe needs probe pairs");
  const auto fp = fingerprint_of(problem, mc, "decay|" + function_identity(f));

  DecayProbeResult result;
  result.predicted_slope = -decay_power(problem, f);
  for (double t : t_grid) result.rows.push_back({t, 0.0, 0.0, 0, {}});
  for (auto& row : result.rows) row.per_probe.resize(probes.size());

  // Probes sharing a base point run as extra tangents of one ensemble.
  std::vector<bool> done(probes.size(), false);
  for (std::size_t a = 0; a < probes.size(); ++a) {
    if (done[a]) continue;
    std::vector<std::size_t> group;
    std::vector<SpectralField> dirs;
    for (std::size_t b = a; b < probes.size(); ++b) {
      if (!done[b] && probes[b].x == probes[a].x) {
        group.push_back(b);
        dirs.push_back(probes[b].h);
        done[b] = true;
      }
    }
    auto samples = gradient_samples(problem, f, {probes[a].x}, dirs, t_grid, mc);
    for (std::size_t j = 0; j < t_grid.size(); ++j) {
      for (std::size_t d = 0; d < group.size(); ++d) {
        result.rows[j].per_probe[group[d]] = to_estimate(samples.column(j * dirs.size() + d), t_grid[j], fp);
      }
    }
  }
  std::vector<double> lx, ly;
  for (auto& row : result.rows) {
    for (std::size_t p = 0; p < probes.size(); ++p) {
      const auto& e = row.per_probe[p];
      if (std::abs(e.value) >= row.value) {
        row.value = std::abs(e.value);
        row.std_error = e.std_error;
        row.probe = p;
      }
    }
    lx.push_back(std::log(row.t));
    ly.push_back(std::log(std::max(row.value, 1e-300)));
    result.constant = std::max(result.constant, row.value * std::pow(row.t, -result.predicted_slope));
  }
  result.fit = ols_fit(lx, ly);
  return result;
}

namespace {

ResolventEstimate resolvent_impl(const Problem& problem, const TestFunction& f,
                                 const StencilRequest& request, double lambda,
                                 const ResolventBudget& budget) {
  const double t_max = resolvent_horizon(lambda, f.sup_norm(), budget);
  QuadratureSpec q;
  q.integrand = &f;
  q.kernel = [lambda](double t) { return std::exp(-lambda * t); };
  q.horizon = t_max;
  const bool gradient = request.quantity == StencilQuantity::Gradient;
  auto out = run_quadrature(problem, request, q, budget.mc,
                            std::string(gradient ? "Du|" : "u|") + num(lambda) + "|" +
                                function_identity(f));
  ResolventEstimate r;
  const auto stats = out.stencil.samples.column(0);
  r.value = stats.mean();
  r.std_error = stats.stderr_mean();
  r.lambda = lambda;
  r.t_max = t_max;
  r.nodes = std::move(out.stencil.nodes);
  const double scale = gradient ? out.late_node_max : f.sup_norm();
  r.tail_bound = std::exp(-lambda * t_max) * scale / lambda;
  r.head_bound = out.head_bound;
  r.quadrature_error = out.quadrature_error;
  r.total_error = r.std_error + r.tail_bound + r.head_bound + r.quadrature_error;
  r.partial = !(r.total_error <= budget.tolerance);
  r.fingerprint = out.stencil.fingerprint;
  return r;
}

}  // namespace

ResolventEstimate resolvent(const Problem& problem, const TestFunction& f, const SpectralField& x,
                            double lambda, const ResolventBudget& budget) {
  StencilRequest req;
  req.points = {x};
  return resolvent_impl(problem, f, req, lambda, budget);
}

ResolventEstimate resolvent_gradient(const Problem& problem, const TestFunction& f,
                                     const SpectralField& x, const SpectralField& h,
                                     double lambda, const ResolventBudget& budget) {
  StencilRequest req;
  req.points = {x};
  req.direction = h;
  req.quantity = StencilQuantity::Gradient;
  return resolvent_impl(problem, f, req, lambda, budget);
}

StencilResult resolvent_stencil(const Problem& problem, const TestFunction& f,
                                const StencilRequest& request, double lambda,
                                const ResolventBudget& budget) {
  const double t_max = resolvent_horizon(lambda, f.sup_norm(), budget);
  QuadratureSpec q;
  q.integrand = &f;
  q.kernel = [lambda](double t) { return std::exp(-lambda * t); };
  q.horizon = t_max;
  const bool gradient = request.quantity == StencilQuantity::Gradient;
  auto out = run_quadrature(problem, request, q, budget.mc,
                            std::string(gradient ? "Du-stencil|" : "u-stencil|") + num(lambda) +
                                "|" + function_identity(f));
  const double scale = gradient ? out.late_node_max : f.sup_norm();
  out.stencil.deterministic_error = std::exp(-lambda * t_max) * scale / lambda + out.head_bound +
                                    out.quadrature_error;
  return std::move(out.stencil);
}

StencilResult evolution_stencil(const Problem& problem, const TestFunction& f,
                                const SourceTerm& g, double t, bool include_initial,
                                const StencilRequest& request, const ResolventBudget& budget) {
  if (!(t > 0.0)) throw DomainError("evolution stencil needs t > 0");
  QuadratureSpec q;
  q.integrand = &g.f;
  q.kernel = [&g, t](double r) { return g.amplitude(t - r); };
  q.terminal = include_initial ? &f : nullptr;
  q.horizon = t;
  const bool gradient = request.quantity == StencilQuantity::Gradient;
  auto out = run_quadrature(problem, request, q, budget.mc,
                            std::string(gradient ? "Dv|" : "v|") + num(t) + "|" +
                                (include_initial ? function_identity(f) : "") + "|" +
                                function_identity(g.f) + "|" + num(g.c0) + "," + num(g.c1) + "," +
                                num(g.omega));
  out.stencil.deterministic_error = out.head_bound + out.quadrature_error;
  return std::move(out.stencil);
}

SemigroupEstimate evolution_mild(const Problem& problem, const TestFunction& f,
                                 const SourceTerm& g, double t, const SpectralField& x,
                                 const ResolventBudget& budget) {
  if (t < 0.0) throw DomainError("evolution time must be non-negative");
  f.check(*problem.basis);
  if (t == 0.0) return {f(x), 0.0, 0, 0.0, fingerprint_of(problem, budget.mc, "v0")};
  StencilRequest req;
  req.points = {x};
  auto st = evolution_stencil(problem, f, g, t, true, req, budget);
  return to_estimate(st.samples.column(0), t, st.fingerprint);
}

namespace ou {

double variance(double lambda, double gamma, double t) {
  return std::pow(lambda, -gamma) * (-std::expm1(-2.0 * lambda * t)) / (2.0 * lambda);
}

double value(double x1, double lambda, double gamma, double t) {
  return std::exp(-variance(lambda, gamma, t) / 2.0) * std::cos(std::exp(-lambda * t) * x1);
}

double gradient(double x1, double lambda, double gamma, double t) {
  const double e = std::exp(-lambda * t);
  return -e * std::exp(-variance(lambda, gamma, t) / 2.0) * std::sin(e * x1);
}

double second_derivative(double x1, double lambda, double gamma, double t) {
  const double e = std::exp(-lambda * t);
  return -e * e * std::exp(-variance(lambda, gamma, t) / 2.0) * std::cos(e * x1);
}

}  // namespace ou

}  // namespace spdelab
