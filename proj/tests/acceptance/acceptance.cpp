// Acceptance suite: one PASS/FAIL line per criterion.
//
//   spdelab_acceptance            run criteria 1..8
//   spdelab_acceptance 1 6 7      run a subset
//
// Exit status is 0 only if every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "spdelab/campaign.hpp"
#include "spdelab/parallel.hpp"
#include "spdelab/regularity.hpp"

using namespace spdelab;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr double kOuSigmas = 3.0;
constexpr std::size_t kOuPaths = 100000;
constexpr int kOuModes = 64;
constexpr double kOuSeconds = 120.0;  // per gamma

constexpr double kFdSigmas = 3.0;
constexpr std::size_t kFdPaths = 10000;
constexpr double kFdEps = 1e-3;
constexpr double kFdSeconds = 120.0;

constexpr double kDecaySlack = 0.1;
constexpr std::size_t kDecayPaths = 1000;
constexpr double kDecaySeconds = 600.0;

constexpr double kExponentTolerance = 0.15;
constexpr double kMinR2 = 0.9;
constexpr double kSchauderPathsPerPair = 1e5;
constexpr int kSchauderModes = 32;
constexpr double kSchauderSeconds = 3600.0;  // per pair
constexpr double kEvolutionSeconds = 1800.0;

constexpr std::size_t kFlowPairs = 1000;
constexpr double kFlowSlack = 1.05;
constexpr double kFlowSeconds = 60.0;

const ReactionSpec kAllenCahn = ReactionSpec::polynomial({0.0, 1.0, 0.0, -1.0});

std::size_t worker_threads() {
  return std::max(1u, std::thread::hardware_concurrency());
}

class Stopwatch {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;

  void check(bool ok, std::string line) {
    pass = pass && ok;
    details.push_back(std::string(ok ? "ok    " : "FAIL  ") + line);
  }
  void note(std::string line) { details.push_back("      " + std::move(line)); }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Problem problem_1d(int k, double gamma, double dt, const ReactionSpec& reaction) {
  Problem p;
  p.basis = SpectralBasis::create({1, Boundary::Dirichlet, gamma, k, 4 * k});
  p.reaction = reaction;
  p.solver.dt = dt;
  return p;
}

MonteCarloConfig mc(std::size_t paths, std::uint64_t seed) {
  MonteCarloConfig c;
  c.paths = paths;
  c.seed = seed;
  c.threads = worker_threads();
  return c;
}

const char* gamma_label(double gamma) {
  if (gamma == 0.0) return "0";
  if (gamma == 1.0) return "1";
  return "1/3";
}

const double kGammas[] = {0.0, 1.0 / 3.0, 1.0};

// 1. F = 0: estimate_Pt and bel_gradient against the Gaussian closed forms.
// Mode 1 has eigenvalue 1, where the noise colour drops out; mode 2
// (eigenvalue 4) sees gamma through the variance 4^{-gamma} (1 - e^{-8t}) / 8.
Outcome ou_oracle() {
  Outcome out;
  const double x1 = 0.7;
  const std::vector<double> times{0.1, 0.5, 1.0};
  std::uint64_t seed = 101;
  for (double gamma : kGammas) {
    Stopwatch clock;
    auto p = problem_1d(kOuModes, gamma, 1e-3, ReactionSpec::zero());
    for (std::size_t mode : {0, 1}) {
      const double lambda = p.basis->eigenvalue(mode);
      const auto f = TestFunction::cosine({mode});
      const auto x = SpectralField::mode(p.basis, mode, x1);
      const auto h = SpectralField::mode(p.basis, mode);
      const auto pt = estimate_Pt_series(p, f, x, times, mc(kOuPaths, seed++));
      const auto gr = bel_gradient_series(p, f, x, h, times, mc(kOuPaths, seed++));
      for (std::size_t j = 0; j < times.size(); ++j) {
        const double t = times[j];
        const double v = ou::value(x1, lambda, gamma, t);
        const double g = ou::gradient(x1, lambda, gamma, t);
        const double zv = std::abs(pt[j].value - v) / pt[j].std_error;
        const double zg = std::abs(gr[j].value - g) / gr[j].std_error;
        out.check(zv <= kOuSigmas, fmt("gamma=%s e_%zu t=%.1f P(t)f   %.6f vs %.6f  z=%.2f",
                                       gamma_label(gamma), mode + 1, t, pt[j].value, v, zv));
        out.check(zg <= kOuSigmas, fmt("gamma=%s e_%zu t=%.1f DP(t)f  %.6f vs %.6f  z=%.2f",
                                       gamma_label(gamma), mode + 1, t, gr[j].value, g, zg));
      }
    }
    const double s = clock.seconds();
    out.check(s <= kOuSeconds, fmt("gamma=%s runtime %.1f s (budget %.0f s)", gamma_label(gamma),
                                   s, kOuSeconds));
  }
  return out;
}

// 2. b = z - z^3: BEL gradient against coupled central differences.
Outcome bel_vs_fd() {
  Outcome out;
  Stopwatch clock;
  auto p = problem_1d(8, 1.0 / 3.0, 2e-3, kAllenCahn);
  const auto f = TestFunction::cosine({0, 1, 2});
  SpectralField x(p.basis);
  x[0] = 0.5;
  x[1] = -0.2;
  const auto h = unit_mode(p.basis, 0);
  const std::vector<double> times{0.1, 1.0};
  const auto bel = bel_gradient_series(p, f, x, h, times, mc(kFdPaths, 201));
  for (std::size_t j = 0; j < times.size(); ++j) {
    const auto fd = fd_gradient(p, f, x, h, times[j], kFdEps, mc(kFdPaths, 202 + j));
    const double se = std::hypot(bel[j].std_error, fd.std_error);
    const double z = std::abs(bel[j].value - fd.value) / se;
    out.check(z <= kFdSigmas, fmt("t=%.1f BEL %.5f (se %.1e) FD %.5f (se %.1e)  z=%.2f", times[j],
                                  bel[j].value, bel[j].std_error, fd.value, fd.std_error, z));
  }
  const double s = clock.seconds();
  out.check(s <= kFdSeconds, fmt("runtime %.1f s (budget %.0f s)", s, kFdSeconds));
  return out;
}

// 3. Gradient decay for rough f; bounded gradients for Lipschitz f.
Outcome gradient_decay() {
  Outcome out;
  Stopwatch clock;
  std::vector<double> ts;
  for (int i = 0; i <= 6; ++i) ts.push_back(std::pow(10.0, -3.0 + i / 3.0));
  std::uint64_t seed = 301;
  for (double gamma : kGammas) {
    auto p = problem_1d(16, gamma, 1e-4, kAllenCahn);
    const auto ladder = mode_ladder(*p.basis);
    std::vector<ProbePair> probes;
    for (auto k : ladder) probes.push_back({SpectralField(p.basis), unit_mode(p.basis, k)});

    const auto rough = goku_decay_probe(p, TestFunction::rough(ladder), ts, probes,
                                        mc(kDecayPaths, seed++));
    const double bound = -(1.0 + gamma) / 2.0 - kDecaySlack;
    out.check(rough.fit.slope >= bound,
              fmt("gamma=%s rough f: slope %.3f (R2 %.3f) >= %.3f", gamma_label(gamma),
                  rough.fit.slope, rough.fit.r2, bound));

    const auto lip_f = TestFunction::lipschitz(ladder);
    const auto lip = goku_decay_probe(p, lip_f, ts, probes, mc(kDecayPaths, seed++));
    const double lip_const = lip_f.lipschitz_constant(*p.basis);
    bool bounded = true;
    double worst = 0.0;
    for (const auto& row : lip.rows) {
      // |D P(t) f(x) h| <= e^t [f]_Lip ||h|| with ||h|| = 1.
      const double limit = std::exp(row.t) * lip_const + 3.0 * row.std_error;
      bounded = bounded && row.value <= limit;
      worst = std::max(worst, row.value / (std::exp(row.t) * lip_const));
    }
    out.check(bounded, fmt("gamma=%s Lipschitz f: max |DP(t)f h| / (e^t [f]_Lip) = %.3f, slope %.3f",
                           gamma_label(gamma), worst, lip.fit.slope));
  }
  const double s = clock.seconds();
  out.check(s <= kDecaySeconds, fmt("runtime %.1f s (budget %.0f s)", s, kDecaySeconds));
  return out;
}

std::size_t stencil_points(int order, std::span<const double> scales) {
  std::set<double> m{0.0};
  for (double r : scales) {
    m.insert(r);
    if (order == 2) {
      m.insert(2.0 * r);
      m.insert(-r);
    }
  }
  return m.size();
}

// About kSchauderPathsPerPair simulated trajectories per stencil bundle.
SchauderBudget schauder_budget(const SchauderPlan& plan, const BasisPtr& basis) {
  SchauderBudget b;
  const auto points = stencil_points(plan.order, b.scales);
  const auto probes = ladder_probes(basis).size();
  b.resolvent.mc = mc(static_cast<std::size_t>(kSchauderPathsPerPair /
                                               static_cast<double>(points * probes)),
                      401);
  b.resolvent.mc.late_dt = 1e-2;
  b.resolvent.tolerance = 1e-2;
  b.tolerance = kExponentTolerance;
  b.min_r2 = kMinR2;
  return b;
}

void report_lines(Outcome& out, const std::string& label, const RegularityReport& r) {
  out.check(r.verdict == Verdict::Pass,
            fmt("%s %s: exponent %.3f +- %.3f, predicted %.3f, R2 %.3f, %zu scales, %s",
                label.c_str(), r.target.c_str(), r.exponent, r.ci95, r.predicted, r.r2,
                r.fit.points, std::string(to_string(r.verdict)).c_str()));
  std::string rows;
  for (const auto& s : r.scales) {
    rows += fmt(" %.4g:%.3g%s", s.r, s.statistic, s.masked ? "(m)" : "");
  }
  out.note("scales" + rows);
}

// 4. Stationary Schauder exponents for five (gamma, alpha) pairs.
Outcome schauder_stationary() {
  Outcome out;
  struct Pair {
    double gamma;
    std::optional<double> alpha;
    const char* label;
  };
  const Pair pairs[] = {{0.0, std::nullopt, "(0, -)"},
                        {1.0 / 3.0, std::nullopt, "(1/3, -)"},
                        {1.0, std::nullopt, "(1, -)"},
                        {1.0 / 3.0, 0.25, "(1/3, 0.25)"},
                        {0.0, 0.5, "(0, 0.5)"}};
  for (const auto& pair : pairs) {
    Stopwatch clock;
    const DomainSpec d{1, Boundary::Dirichlet, pair.gamma, kSchauderModes, 4 * kSchauderModes};
    const auto plan = schauder_plan(pair.gamma, pair.alpha);
    auto budget = schauder_budget(plan, SpectralBasis::create(d));
    SolverConfig solver;
    solver.dt = 1e-3;
    const auto bundle = verify_schauder(d, pair.alpha, kAllenCahn, solver, budget);
    out.note(fmt("%s %s, %zu paths per probe", pair.label, plan.statement.c_str(),
                 budget.resolvent.mc.paths));
    for (const auto& r : bundle.reports) report_lines(out, pair.label, r);
    const double s = clock.seconds();
    out.check(s <= kSchauderSeconds,
              fmt("%s runtime %.0f s (budget %.0f s)", pair.label, s, kSchauderSeconds));
  }
  return out;
}

// 5. Spatial exponent of D v_2(1, .) for gamma = 1/3 and rough g.
Outcome schauder_evolution() {
  Outcome out;
  Stopwatch clock;
  const DomainSpec d{1, Boundary::Dirichlet, 1.0 / 3.0, kSchauderModes, 4 * kSchauderModes};
  const auto plan = schauder_plan(d.gamma, std::nullopt);
  auto budget = schauder_budget(plan, SpectralBasis::create(d));
  budget.stationary = false;
  budget.evolution = true;
  budget.evolution_time = 1.0;
  SolverConfig solver;
  solver.dt = 1e-3;
  const auto bundle = verify_schauder(d, std::nullopt, kAllenCahn, solver, budget);
  for (const auto& r : bundle.reports) report_lines(out, "t=1", r);
  const double s = clock.seconds();
  out.check(s <= kEvolutionSeconds, fmt("runtime %.0f s (budget %.0f s)", s, kEvolutionSeconds));
  return out;
}

// 6. ||X(t, x) - X(t, y)|| <= e^t ||x - y|| over coupled pairs.
Outcome lipschitz_flow() {
  Outcome out;
  Stopwatch clock;
  auto p = problem_1d(16, 1.0 / 3.0, 1e-3, kAllenCahn);
  const auto grid = TimeGrid::uniform(1e-3, 1.0);
  const std::size_t i_half = grid.index_of(0.5);
  const std::size_t i_one = grid.index_of(1.0);
  const std::size_t n = p.basis->size();

  // Initial pairs: random fields with decaying spectra, half close, half far.
  std::mt19937_64 rng(601);
  std::normal_distribution<double> normal;
  std::vector<std::pair<SpectralField, SpectralField>> pairs;
  for (std::size_t i = 0; i < kFlowPairs; ++i) {
    SpectralField x(p.basis), y(p.basis);
    const double spread = i % 2 ? 1.0 : 0.05;
    for (std::size_t k = 0; k < n; ++k) {
      const double decay = 1.0 / static_cast<double>(k + 1);
      x[k] = 1.5 * decay * normal(rng);
      y[k] = x[k] + spread * decay * normal(rng);
    }
    pairs.emplace_back(std::move(x), std::move(y));
  }

  std::vector<double> ratio_half(kFlowPairs), ratio_one(kFlowPairs);
  parallel_chunks(kFlowPairs, worker_threads(), [&](std::size_t i, std::size_t) {
    MildSolver solver(p.basis, p.reaction, p.solver);
    const auto& [x, y] = pairs[i];
    const double d0 = sup_norm(x - y);
    std::vector<TrajectoryState> states{TrajectoryState::start(x), TrajectoryState::start(y)};
    solver.run(std::span(states), grid, NoiseStream{601, i, 0},
               [&](std::size_t index, std::span<const TrajectoryState> s) {
                 if (index != i_half && index != i_one) return;
                 const double t = grid.time(index);
                 const double r = sup_norm(s[0].x - s[1].x) / (std::exp(t) * d0);
                 (index == i_half ? ratio_half : ratio_one)[i] = r;
               });
  });
  for (auto [t, ratios] : {std::pair{0.5, &ratio_half}, std::pair{1.0, &ratio_one}}) {
    const auto violations =
        std::count_if(ratios->begin(), ratios->end(), [](double r) { return r > kFlowSlack; });
    const double worst = *std::max_element(ratios->begin(), ratios->end());
    out.check(violations == 0,
              fmt("t=%.1f: max ||X(t,x)-X(t,y)|| / (e^t ||x-y||) = %.4f, %ld beyond %.2f", t,
                  worst, static_cast<long>(violations), kFlowSlack));
  }
  const double s = clock.seconds();
  out.check(s <= kFlowSeconds, fmt("runtime %.1f s (budget %.0f s)", s, kFlowSeconds));
  return out;
}

// 7. Accept/reject table of the hypothesis validators.
Outcome validators() {
  Outcome out;
  struct DomainRow {
    int d;
    double gamma;
    bool accept;
  };
  const DomainRow domains[] = {
      {1, 0.0, true},  {1, 1.0 / 3.0, true}, {1, 1.0, true},   {2, 0.0, false},
      {2, 0.01, true}, {2, 1.0, true},       {3, 0.0, false},  {3, 0.5, false},
      {3, 0.51, true}, {3, 1.0, true},       {1, -0.1, false}, {2, 1.2, false},
  };
  for (const auto& row : domains) {
    const int k = row.d == 3 ? 4 : 8;
    const bool ok = domain_violations({row.d, Boundary::Dirichlet, row.gamma, k, 4 * k}).empty();
    out.check(ok == row.accept, fmt("Dirichlet cube d=%d gamma=%.3g: %s", row.d, row.gamma,
                                    ok ? "accepted" : "rejected"));
  }
  struct ReactionRow {
    const char* label;
    std::vector<std::vector<double>> coefficients;
    bool accept;
  };
  const ReactionRow reactions[] = {
      {"b = z - z^3", {{0}, {1}, {0}, {-1}}, true},
      {"b = z + z^3", {{0}, {1}, {0}, {1}}, false},
      {"b = z^2 - z^3", {{0}, {0}, {1}, {-1}}, true},
      {"b = -z^5 + 3 z^3", {{0}, {0}, {0}, {3}, {0}, {-1}}, true},
      {"b = z^5", {{0}, {0}, {0}, {0}, {0}, {1}}, false},
      {"b = -(1 + cos xi / 2) z^3", {{0}, {0}, {0}, {-1, -0.5}}, true},
      {"b = -(1 + cos xi) z^3", {{0}, {0}, {0}, {-1, -1}}, false},
      {"b = -(1/2 + cos xi) z^3", {{0}, {0}, {0}, {-0.5, -1}}, false},
      {"b = 0", {{0}, {0}}, true},
      {"b = 2 - z", {{2}, {-1}}, true},
      {"b = 1 + z (m = 0)", {{1}, {1}}, true},
  };
  for (const auto& row : reactions) {
    ExperimentConfig c;
    c.reaction = row.coefficients;
    const bool ok = validate(c).ok();
    out.check(ok == row.accept, fmt("%s: %s", row.label, ok ? "accepted" : "rejected"));
  }
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 8. Every campaign is byte-identical at 1 and 8 threads and on rerun.
Outcome determinism() {
  Outcome out;
  auto c = parse_config(R"(
name: determinism
seed: 801
domain: {dimension: 1, gamma: 0.3333333333333333, modes: 8}
reaction: {coefficients: [0, 1, 0, -1]}
solver: {dt: 0.01, horizon: 1}
estimator: {paths: 200, fd_eps: 0.001, tolerance: 0.1, late_dt: 0.05}
function: {profile: tanh, modes: [0, 1, 3]}
point: [[0, 0.4], [1, -0.3]]
campaign: {times: [0.1, 0.5, 1], scales: {first: 1, last: 4}, evolution: true, trajectories: 24}
)");
  const auto root = fs::temp_directory_path() / "spdelab_acceptance_determinism";
  for (auto sub : {Subcommand::Simulate, Subcommand::Semigroup, Subcommand::Gradient,
                   Subcommand::Resolvent, Subcommand::Evolution, Subcommand::Regularity}) {
    const std::string name(to_string(sub));
    std::vector<std::vector<fs::path>> runs;
    for (std::size_t threads : {1, 8, 1}) {
      c.threads = threads;
      const auto dir = root / (name + "_" + std::to_string(runs.size()));
      fs::remove_all(dir);
      runs.push_back(run_campaign(sub, c, dir).artifacts);
    }
    bool same = runs[0].size() == runs[1].size() && runs[0].size() == runs[2].size();
    std::size_t bytes = 0;
    for (std::size_t i = 0; same && i < runs[0].size(); ++i) {
      const auto a = slurp(runs[0][i]);
      same = a == slurp(runs[1][i]) && a == slurp(runs[2][i]);
      bytes += a.size();
    }
    out.check(same, fmt("%s: %zu artifacts, %zu bytes identical at 1, 8 threads and rerun",
                        name.c_str(), runs[0].size(), bytes));
  }
  fs::remove_all(root);
  return out;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "OU oracle equivalence", ou_oracle},
      {2, "BEL gradient vs coupled finite differences", bel_vs_fd},
      {3, "gradient decay as t -> 0", gradient_decay},
      {4, "stationary Schauder exponents", schauder_stationary},
      {5, "evolution Schauder exponent", schauder_evolution},
      {6, "pathwise Lipschitz flow", lipschitz_flow},
      {7, "hypothesis validators", validators},
      {8, "determinism across threads", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  bool all_pass = true;
  std::vector<std::string> summary;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Stopwatch clock;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    for (const auto& d : o.details) std::printf("    [%d] %s\n", c.id, d.c_str());
    const auto line = fmt("%s criterion %d: %s (%.1f s)", o.pass ? "PASS" : "FAIL", c.id, c.name,
                          clock.seconds());
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    summary.push_back(line);
    all_pass = all_pass && o.pass;
  }
  std::printf("\nSummary\n");
  for (const auto& s : summary) std::printf("%s\n", s.c_str());
  return all_pass ? 0 : 1;
}
