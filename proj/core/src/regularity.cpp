#include "spdelab/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

#include "spdelab/error.hpp"
#include "spdelab/fingerprint.hpp"

namespace spdelab {

namespace {

constexpr double kIntegerSlack = 1e-9;

bool is_integer(double v) { return std::abs(v - std::round(v)) < kIntegerSlack; }

// Stencil of one probe: multipliers m (points x + m h, with 0 first) and,
// per scale, one weight list per difference form.
using Weights = std::vector<std::pair<std::size_t, double>>;

struct StencilLayout {
  std::vector<double> multipliers;
  std::vector<std::vector<Weights>> forms;  // [scale][form]
  std::vector<std::vector<bool>> centered;  // [scale][form]
};

StencilLayout layout(std::span<const double> scales, int order, SecondDifference second) {
  using Terms = std::vector<std::pair<double, double>>;
  std::vector<std::vector<Terms>> terms;
  StencilLayout s;
  for (double r : scales) {
    std::vector<Terms> t;
    std::vector<bool> c;
    if (order == 1) {
      t.push_back({{r, 1.0}, {0.0, -1.0}});
      c.push_back(false);
    } else {
      if (second != SecondDifference::Centered) {
        t.push_back({{2.0 * r, 1.0}, {r, -2.0}, {0.0, 1.0}});
        c.push_back(false);
      }
      if (second != SecondDifference::Forward) {
        t.push_back({{r, 1.0}, {0.0, -2.0}, {-r, 1.0}});
        c.push_back(true);
      }
    }
    terms.push_back(std::move(t));
    s.centered.push_back(std::move(c));
  }
  std::vector<double> m;
  for (const auto& per_scale : terms) {
    for (const auto& t : per_scale) {
      for (const auto& [mult, w] : t) {
        if (mult != 0.0) m.push_back(mult);
      }
    }
  }
  std::sort(m.begin(), m.end());
  m.erase(std::unique(m.begin(), m.end()), m.end());
  s.multipliers.push_back(0.0);
  s.multipliers.insert(s.multipliers.end(), m.begin(), m.end());
  auto index = [&](double mult) -> std::size_t {
    if (mult == 0.0) return 0;
    return 1 + static_cast<std::size_t>(std::lower_bound(m.begin(), m.end(), mult) - m.begin());
  };
  for (const auto& per_scale : terms) {
    std::vector<Weights> forms;
    for (const auto& t : per_scale) {
      Weights w;
      for (const auto& [mult, weight] : t) w.emplace_back(index(mult), weight);
      forms.push_back(std::move(w));
    }
    s.forms.push_back(std::move(forms));
  }
  return s;
}

RegularityReport profile(const StencilEvaluator& target, std::span<const double> scales,
                         std::span<const ProbePair> probes, const ProfileOptions& options,
                         int order) {
  if (scales.size() < 2) throw DomainError("a profile needs at least two scales");
  for (double r : scales) {
    if (!(r > 0.0)) throw DomainError("scales must be positive");
  }
  if (probes.empty()) throw DomainError("a profile needs at least one probe");

  RegularityReport rep;
  rep.name = options.name;
  rep.target = options.target;
  rep.order = order;
  rep.predicted = options.predicted;
  rep.slope_offset = options.slope_offset;
  rep.tolerance = options.tolerance;
  rep.min_r2 = options.min_r2;
  for (double r : scales) {
    ScaleRow row;
    row.r = r;
    rep.scales.push_back(std::move(row));
  }

  const auto lay = layout(scales, order, options.second);
  std::string fp_text;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const auto& probe = probes[p];
    std::vector<SpectralField> points;
    for (double m : lay.multipliers) {
      points.push_back(probe.x + m * probe.h);
    }
    const auto result = target(points, probe.h);
    if (result.samples.width != points.size()) {
      throw DomainError("stencil evaluator returned the wrong number of columns");
    }
    rep.samples += result.samples.paths * result.samples.width;
    rep.deterministic_error = std::max(rep.deterministic_error, result.deterministic_error);
    fp_text += hex(result.fingerprint);

    std::vector<double> w(points.size(), 0.0);
    for (std::size_t j = 0; j < scales.size(); ++j) {
      double best = -1.0, best_se = 0.0;
      bool best_centered = false;
      for (std::size_t form = 0; form < lay.forms[j].size(); ++form) {
        std::fill(w.begin(), w.end(), 0.0);
        for (const auto& [i, weight] : lay.forms[j][form]) w[i] += weight;
        const auto st = result.samples.combination(w);
        if (std::abs(st.mean()) > best) {
          best = std::abs(st.mean());
          best_se = st.stderr_mean();
          best_centered = lay.centered[j][form];
        }
      }
      auto& row = rep.scales[j];
      row.per_probe.push_back(best);
      row.per_probe_se.push_back(best_se);
      if (order == 2) row.per_probe_centered.push_back(best_centered);
    }
  }
  for (auto& row : rep.scales) {
    const auto best = std::max_element(row.per_probe.begin(), row.per_probe.end());
    row.probe = static_cast<std::size_t>(best - row.per_probe.begin());
    row.statistic = *best;
    row.std_error = row.per_probe_se[row.probe];
  }
  rep.second = options.second;
  rep.fingerprint = fnv1a(fp_text + "|order=" + std::to_string(order) + "|" +
                          std::string(order == 2 ? to_string(options.second) : ""));
  finalize(rep, options.mask_ratio, options.min_scales);
  return rep;
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

std::string_view to_string(SecondDifference s) {
  switch (s) {
    case SecondDifference::Forward: return "forward";
    case SecondDifference::Centered: return "centered";
    case SecondDifference::Both: return "both";
  }
  return "both";
}

StencilEvaluator deterministic_target(std::function<double(const SpectralField&)> target) {
  return [target = std::move(target)](const std::vector<SpectralField>& points,
                                      const SpectralField&) {
    StencilResult r;
    r.samples.paths = 1;
    r.samples.width = points.size();
    for (const auto& p : points) r.samples.data.push_back(target(p));
    return r;
  };
}

std::vector<double> dyadic_scales(int first, int last) {
  if (first > last) throw DomainError("dyadic scale range is empty");
  std::vector<double> r;
  for (int j = first; j <= last; ++j) r.push_back(std::ldexp(1.0, -j));
  return r;
}

void finalize(RegularityReport& report, double mask_ratio, std::size_t min_scales) {
  std::vector<double> lx, ly;
  for (auto& row : report.scales) {
    // A zero statistic has no logarithm; it is masked like a noise-dominated scale.
    row.masked = 4.0 * row.std_error > mask_ratio * row.statistic || row.statistic == 0.0;
    if (!row.masked) {
      lx.push_back(std::log(row.r));
      ly.push_back(std::log(row.statistic));
    }
  }
  report.fit = LinearFit{};
  report.exponent = report.ci95 = report.r2 = 0.0;
  if (lx.size() < std::max<std::size_t>(min_scales, 2)) {
    report.verdict = Verdict::Inconclusive;
    return;
  }
  report.fit = ols_fit(lx, ly);
  report.exponent = report.fit.slope - report.slope_offset;
  report.ci95 = report.fit.slope_ci95;
  report.r2 = report.fit.r2;
  const bool close = std::abs(report.exponent - report.predicted) <= report.tolerance;
  report.verdict = close && report.r2 >= report.min_r2 ? Verdict::Pass : Verdict::Fail;
}

RegularityReport holder_profile(const StencilEvaluator& target, std::span<const double> scales,
                                std::span<const ProbePair> probes, const ProfileOptions& options) {
  return profile(target, scales, probes, options, 1);
}

RegularityReport zygmund_profile(const StencilEvaluator& target, std::span<const double> scales,
                                 std::span<const ProbePair> probes, const ProfileOptions& options) {
  return profile(target, scales, probes, options, 2);
}

SchauderPlan schauder_plan(double gamma, std::optional<double> alpha) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw DomainError("gamma must lie in [0, 1]");
  if (alpha && !(*alpha > 0.0 && *alpha < 1.0)) {
    throw DomainError("alpha must lie in (0, 1)");
  }
  SchauderPlan plan;
  plan.gamma = gamma;
  plan.alpha = alpha;
  const double a = alpha.value_or(0.0);
  plan.beta = a + 2.0 / (1.0 + gamma);
  const double b = plan.beta;
  std::ostringstream s;
  if (is_integer(b) && std::round(b) == 1.0) {
    plan.target = "u";
    plan.order = 2;
    plan.predicted = 1.0;
    s << "u in Z^1: second differences of u scale like r";
  } else if (b < 2.0 - kIntegerSlack) {
    plan.target = "Du";
    plan.order = 1;
    plan.predicted = b - 1.0;
    s << "Du Hoelder with exponent " << plan.predicted;
  } else if (is_integer(b) && std::round(b) == 2.0) {
    plan.target = "Du";
    plan.order = 2;
    plan.predicted = 1.0;
    s << "Du in Z^1: second differences of Du scale like r";
  } else if (b < 3.0 - kIntegerSlack) {
    plan.target = "Du";
    plan.order = 2;
    plan.predicted = b - 2.0;
    plan.slope_offset = 1.0;
    s << "D^2u Hoelder with exponent " << plan.predicted
      << ": second differences of Du scale like r^" << b - 1.0;
  } else {
    throw DomainError("exponents beyond 3 need third differences, which are not measured");
  }
  plan.statement = s.str();
  return plan;
}

std::vector<ProbePair> ladder_probes(const BasisPtr& basis) {
  std::vector<ProbePair> probes;
  for (auto k : mode_ladder(*basis)) {
    probes.push_back({SpectralField(basis), unit_mode(basis, k)});
  }
  return probes;
}

SchauderBundle verify_schauder(const DomainSpec& domain, std::optional<double> alpha,
                               const ReactionSpec& reaction, const SolverConfig& solver,
                               const SchauderBudget& budget) {
  Problem problem{SpectralBasis::create(domain), reaction, solver};
  problem.validate();
  if (!(budget.lambda > 0.0)) throw DomainError("resolvent needs lambda > 0");

  SchauderBundle bundle;
  bundle.plan = schauder_plan(domain.gamma, alpha);
  const auto& plan = bundle.plan;
  const auto ladder = mode_ladder(*problem.basis);
  const TestFunction f = alpha ? TestFunction::holder(*alpha, ladder, budget.profile_scale)
                               : TestFunction::rough(ladder, budget.profile_scale);
  const auto probes = ladder_probes(problem.basis);
  const StencilQuantity quantity =
      plan.target == "u" ? StencilQuantity::Value : StencilQuantity::Gradient;

  auto options = [&](const std::string& target, const std::string& name) {
    ProfileOptions o;
    o.predicted = plan.predicted;
    o.slope_offset = plan.slope_offset;
    o.tolerance = budget.tolerance;
    o.min_r2 = budget.min_r2;
    o.mask_ratio = budget.mask_ratio;
    o.target = target;
    o.name = name;
    return o;
  };
  auto measure = [&](const StencilEvaluator& eval, const ProfileOptions& o) {
    return plan.order == 1 ? holder_profile(eval, budget.scales, probes, o)
                           : zygmund_profile(eval, budget.scales, probes, o);
  };
  auto request = [&](const std::vector<SpectralField>& points, const SpectralField& h) {
    StencilRequest req;
    req.points = points;
    req.quantity = quantity;
    if (quantity == StencilQuantity::Gradient) req.direction = h;
    return req;
  };

  if (budget.stationary) {
    StencilEvaluator eval = [&](const std::vector<SpectralField>& points, const SpectralField& h) {
      return resolvent_stencil(problem, f, request(points, h), budget.lambda, budget.resolvent);
    };
    bundle.reports.push_back(measure(eval, options(plan.target, "resolvent")));
  }
  if (budget.evolution) {
    const SourceTerm g{f, 1.0, 0.0, 0.0};
    const double t = budget.evolution_time;
    StencilEvaluator eval = [&](const std::vector<SpectralField>& points, const SpectralField& h) {
      return evolution_stencil(problem, f, g, t, false, request(points, h), budget.resolvent);
    };
    const std::string target = quantity == StencilQuantity::Value ? "v2" : "Dv2";
    bundle.reports.push_back(measure(eval, options(target, "evolution")));
  }
  for (const auto& r : bundle.reports) {
    if (!(r.deterministic_error <= budget.resolvent.tolerance)) {
      bundle.partial = true;
      std::ostringstream s;
      s << r.name << ": deterministic error " << r.deterministic_error << " exceeds tolerance "
        << budget.resolvent.tolerance << "; ";
      bundle.note += s.str();
    }
  }
  return bundle;
}

std::string to_json(const RegularityReport& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["target"] = r.target;
  j["order"] = r.order;
  if (r.order == 2) j["second_difference"] = std::string(to_string(r.second));
  j["predicted"] = r.predicted;
  j["exponent"] = r.exponent;
  j["slope"] = r.fit.slope;
  j["slope_offset"] = r.slope_offset;
  j["ci95"] = r.ci95;
  j["r2"] = r.r2;
  j["fitted_scales"] = r.fit.points;
  j["tolerance"] = r.tolerance;
  j["min_r2"] = r.min_r2;
  j["verdict"] = std::string(to_string(r.verdict));
  j["samples"] = r.samples;
  j["deterministic_error"] = r.deterministic_error;
  j["fingerprint"] = hex(r.fingerprint);
  auto rows = nlohmann::ordered_json::array();
  for (const auto& s : r.scales) {
    nlohmann::ordered_json row;
    row["r"] = s.r;
    row["statistic"] = s.statistic;
    row["std_error"] = s.std_error;
    row["probe"] = s.probe;
    row["masked"] = s.masked;
    row["per_probe"] = s.per_probe;
    row["per_probe_se"] = s.per_probe_se;
    if (r.order == 2) row["per_probe_centered"] = s.per_probe_centered;
    rows.push_back(std::move(row));
  }
  j["scales"] = std::move(rows);
  return j.dump(2);
}

std::string to_csv(const RegularityReport& r) {
  std::ostringstream s;
  s.precision(17);
  s << "r,statistic,std_error,probe,masked\n";
  for (const auto& row : r.scales) {
    s << row.r << ',' << row.statistic << ',' << row.std_error << ',' << row.probe << ','
      << (row.masked ? 1 : 0) << '\n';
  }
  return s.str();
}

}  // namespace spdelab
