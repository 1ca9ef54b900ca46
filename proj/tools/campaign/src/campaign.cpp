#include "spdelab/campaign.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "json.hpp"
#include "spdelab/error.hpp"
#include "spdelab/fingerprint.hpp"
#include "spdelab/parallel.hpp"

namespace spdelab {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------- parsing

void check_keys(const YAML::Node& node, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!node.IsMap()) throw ConfigError(where + " must be a mapping");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& where) {
  const auto v = node[key];
  if (!v) return;
  try {
    out = v.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

void read_bool(const YAML::Node& node, const char* key, bool& out, const std::string& where) {
  read(node, key, out, where);
}

std::optional<double> read_optional(const YAML::Node& node, const char* key,
                                    std::optional<double> fallback, const std::string& where) {
  const auto v = node[key];
  if (!v) return fallback;
  if (v.IsNull()) return std::nullopt;
  const auto text = v.as<std::string>();
  if (text == "none") return std::nullopt;
  try {
    return v.as<double>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where + "." + key + " must be a number or none");
  }
}

std::vector<std::vector<double>> read_reaction(const YAML::Node& node) {
  std::vector<std::vector<double>> out;
  if (!node.IsSequence()) throw ConfigError("reaction.coefficients must be a list");
  for (const auto& c : node) {
    try {
      if (c.IsSequence()) {
        out.push_back(c.as<std::vector<double>>());
      } else {
        out.push_back({c.as<double>()});
      }
    } catch (const YAML::Exception&) {
      throw ConfigError("reaction.coefficients entries must be numbers or lists of numbers");
    }
  }
  return out;
}

// ---------------------------------------------------------------- artifacts

struct Header {
  std::string fingerprint;
  std::uint64_t seed;
  std::string subcommand;
};

std::string csv_header(const Header& h) {
  return "# spdelab schema=" + std::to_string(kArtifactSchema) + " code_version=" +
         code_version() + " subcommand=" + h.subcommand + " fingerprint=" + h.fingerprint +
         " seed=" + std::to_string(h.seed) + "\n";
}

Json json_header(const Header& h, const ExperimentConfig& config) {
  Json j;
  j["schema"] = kArtifactSchema;
  j["code_version"] = code_version();
  j["subcommand"] = h.subcommand;
  j["fingerprint"] = h.fingerprint;
  j["seed"] = h.seed;
  j["name"] = config.name;
  j["config"] = canonical_text(config);
  return j;
}

std::string md_header(const Header& h, const ExperimentConfig& config) {
  std::ostringstream s;
  s << "# " << config.name << " (" << h.subcommand << ")\n\n"
    << "- fingerprint: `" << h.fingerprint << "`\n"
    << "- seed: " << h.seed << "\n"
    << "- code version: " << code_version() << "\n"
    << "- schema: " << kArtifactSchema << "\n\n";
  return s.str();
}

class ArtifactSet {
public:
  explicit ArtifactSet(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::string& text) {
    const auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write artifact " + path.string());
    out << text;
    paths_.push_back(path);
  }
  std::vector<fs::path> take() { return std::move(paths_); }

private:
  fs::path dir_;
  std::vector<fs::path> paths_;
};

Json estimate_json(const SemigroupEstimate& e) {
  Json j;
  j["t"] = e.t;
  j["value"] = e.value;
  j["std_error"] = e.std_error;
  j["samples"] = e.samples;
  j["fingerprint"] = hex(e.fingerprint);
  return j;
}

// ---------------------------------------------------------------- subcommands

void run_simulate(const ExperimentConfig& c, const Header& h, ArtifactSet& out, Json& report,
                  std::string& md) {
  const auto problem = c.problem();
  const auto& basis = problem.basis;
  const auto x0 = c.point_field(basis);
  const auto grid = TimeGrid::uniform(problem.solver.dt, problem.solver.horizon);
  const std::size_t steps = grid.steps();
  const std::size_t every =
      c.campaign.record_every > 0 ? c.campaign.record_every : std::max<std::size_t>(1, steps / 100);
  std::vector<std::size_t> records;
  for (std::size_t i = 0; i <= steps; i += every) records.push_back(i);
  if (records.back() != steps) records.push_back(steps);
  const std::size_t n_modes = std::min(c.campaign.record_modes, basis->size());
  const std::size_t n_paths = c.campaign.trajectories;
  const std::size_t width = 1 + n_modes;  // sup norm, coefficients

  // path-major [path][record][width]
  std::vector<double> data(n_paths * records.size() * width, 0.0);
  std::vector<long> record_of(steps + 1, -1);
  for (std::size_t r = 0; r < records.size(); ++r) record_of[records[r]] = static_cast<long>(r);
  parallel_chunks(n_paths, c.threads, [&](std::size_t p, std::size_t) {
    MildSolver solver(basis, problem.reaction, problem.solver);
    std::vector<TrajectoryState> state{TrajectoryState::start(x0)};
    solver.run(std::span(state), grid, NoiseStream{c.seed, p, 0},
               [&](std::size_t index, std::span<const TrajectoryState> s) {
                 const long r = record_of[index];
                 if (r < 0) return;
                 double* row = data.data() + (p * records.size() + static_cast<std::size_t>(r)) * width;
                 row[0] = sup_norm(s[0].x);
                 for (std::size_t k = 0; k < n_modes; ++k) row[1 + k] = s[0].x[k];
               });
  });

  std::ostringstream traj;
  traj << csv_header(h) << "path,t,sup_norm";
  for (std::size_t k = 0; k < n_modes; ++k) traj << ",c" << k;
  traj << "\n";
  for (std::size_t p = 0; p < n_paths; ++p) {
    for (std::size_t r = 0; r < records.size(); ++r) {
      const double* row = data.data() + (p * records.size() + r) * width;
      traj << p << ',' << num(grid.time(records[r]));
      for (std::size_t w = 0; w < width; ++w) traj << ',' << num(row[w]);
      traj << "\n";
    }
  }
  out.write("trajectories.csv", traj.str());

  // Moments over paths; with F = 0 each mode is an exact OU process.
  const bool ou = problem.reaction.is_zero();
  const double gamma = c.domain.gamma;
  auto ou_moments = [&](std::size_t k, double t) {
    const double lam = basis->eigenvalue(k);
    const double mean = std::exp(-lam * t) * x0[k];
    const double var = lam > 0.0 ? std::pow(lam, -gamma) * -std::expm1(-2.0 * lam * t) / (2.0 * lam) : t;
    return std::pair{mean, var};
  };
  std::ostringstream nodes;
  nodes << csv_header(h) << "t,mode,mean,variance,std_error_mean";
  if (ou) nodes << ",ou_mean,ou_variance";
  nodes << "\n";
  Json final_moments = Json::array();
  double worst_z = 0.0;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const double t = grid.time(records[r]);
    for (std::size_t k = 0; k < n_modes; ++k) {
      RunningStats st;
      for (std::size_t p = 0; p < n_paths; ++p) {
        st.add(data[(p * records.size() + r) * width + 1 + k]);
      }
      nodes << num(t) << ',' << k << ',' << num(st.mean()) << ',' << num(st.variance()) << ','
            << num(st.stderr_mean());
      Json m;
      if (ou) {
        const auto [mu, var] = ou_moments(k, t);
        nodes << ',' << num(mu) << ',' << num(var);
        if (r > 0 && st.stderr_mean() > 0.0) {
          worst_z = std::max(worst_z, std::abs(st.mean() - mu) / st.stderr_mean());
        }
        m["ou_mean"] = mu;
        m["ou_variance"] = var;
      }
      nodes << "\n";
      if (r + 1 == records.size()) {
        Json row;
        row["mode"] = k;
        row["mean"] = st.mean();
        row["variance"] = st.variance();
        row["std_error_mean"] = st.stderr_mean();
        if (ou) row.update(m);
        final_moments.push_back(std::move(row));
      }
    }
  }
  out.write("nodes.csv", nodes.str());
  report["trajectories"] = n_paths;
  report["horizon"] = grid.horizon();
  report["records_per_path"] = records.size();
  report["final_moments"] = std::move(final_moments);
  if (ou) report["max_mean_z_score"] = worst_z;

  std::ostringstream s;
  s << "| mode | mean | variance |" << (ou ? " OU mean | OU variance |" : "") << "\n"
    << "|---|---|---|" << (ou ? "---|---|" : "") << "\n";
  for (const auto& row : report["final_moments"]) {
    s << "| " << row["mode"].get<std::size_t>() << " | " << row["mean"].get<double>() << " | "
      << row["variance"].get<double>() << " |";
    if (ou) s << " " << row["ou_mean"].get<double>() << " | " << row["ou_variance"].get<double>() << " |";
    s << "\n";
  }
  md += "Moments at t = " + num(grid.horizon()) + " over " + std::to_string(n_paths) +
        " paths.\n\n" + s.str();
}

void series_artifacts(const std::vector<SemigroupEstimate>& est, const Header& h, ArtifactSet& out,
                      Json& report, std::string& md, const char* label,
                      const std::vector<SemigroupEstimate>* fd) {
  std::ostringstream nodes;
  nodes << csv_header(h) << "t,value,std_error,samples";
  if (fd) nodes << ",fd_value,fd_std_error";
  nodes << "\n";
  Json rows = Json::array();
  std::ostringstream s;
  s << "| t | " << label << " | std. error |" << (fd ? " FD | FD std. error |" : "") << "\n"
    << "|---|---|---|" << (fd ? "---|---|" : "") << "\n";
  for (std::size_t i = 0; i < est.size(); ++i) {
    const auto& e = est[i];
    nodes << num(e.t) << ',' << num(e.value) << ',' << num(e.std_error) << ',' << e.samples;
    Json row = estimate_json(e);
    s << "| " << e.t << " | " << e.value << " | " << e.std_error << " |";
    if (fd) {
      const auto& d = (*fd)[i];
      nodes << ',' << num(d.value) << ',' << num(d.std_error);
      row["fd_value"] = d.value;
      row["fd_std_error"] = d.std_error;
      s << " " << d.value << " | " << d.std_error << " |";
    }
    nodes << "\n";
    s << "\n";
    rows.push_back(std::move(row));
  }
  out.write("nodes.csv", nodes.str());
  report["estimates"] = std::move(rows);
  md += s.str();
}

void run_semigroup(const ExperimentConfig& c, const Header& h, ArtifactSet& out, Json& report,
                   std::string& md) {
  const auto problem = c.problem();
  const auto f = c.test_function(problem.basis);
  const auto est = estimate_Pt_series(problem, f, c.point_field(problem.basis), c.campaign.times,
                                      c.monte_carlo());
  series_artifacts(est, h, out, report, md, "P(t) f(x)", nullptr);
}

void run_gradient(const ExperimentConfig& c, const Header& h, ArtifactSet& out, Json& report,
                  std::string& md) {
  const auto problem = c.problem();
  const auto f = c.test_function(problem.basis);
  const auto x = c.point_field(problem.basis);
  const auto dir = c.direction_field(problem.basis);
  const auto mc = c.monte_carlo();
  const auto est = bel_gradient_series(problem, f, x, dir, c.campaign.times, mc);
  std::vector<SemigroupEstimate> fd;
  if (c.estimator.fd_eps > 0.0) {
    for (double t : c.campaign.times) {
      fd.push_back(fd_gradient(problem, f, x, dir, t, c.estimator.fd_eps, mc));
    }
  }
  series_artifacts(est, h, out, report, md, "D P(t) f(x) h", fd.empty() ? nullptr : &fd);
}

Json resolvent_json(const ResolventEstimate& r) {
  Json j;
  j["value"] = r.value;
  j["std_error"] = r.std_error;
  j["lambda"] = r.lambda;
  j["t_max"] = r.t_max;
  j["tail_bound"] = r.tail_bound;
  j["head_bound"] = r.head_bound;
  j["quadrature_error"] = r.quadrature_error;
  j["total_error"] = r.total_error;
  j["partial"] = r.partial;
  j["nodes"] = r.nodes.size();
  j["fingerprint"] = hex(r.fingerprint);
  return j;
}

void run_resolvent(const ExperimentConfig& c, const Header& h, ArtifactSet& out, Json& report,
                   std::string& md) {
  const auto problem = c.problem();
  const auto f = c.test_function(problem.basis);
  const auto x = c.point_field(problem.basis);
  const auto budget = c.resolvent_budget();
  const auto u = resolvent(problem, f, x, c.estimator.lambda, budget);
  const auto du =
      resolvent_gradient(problem, f, x, c.direction_field(problem.basis), c.estimator.lambda, budget);
  std::ostringstream nodes;
  nodes << csv_header(h) << "quantity,t,weight,estimate,stderr,n\n";
  for (const auto& [name, r] : {std::pair{"u", &u}, std::pair{"Du", &du}}) {
    for (const auto& n : r->nodes) {
      nodes << name << ',' << num(n.t) << ',' << num(n.weight) << ',' << num(n.estimate) << ','
            << num(n.std_error) << ',' << n.n << "\n";
    }
  }
  out.write("nodes.csv", nodes.str());
  report["u"] = resolvent_json(u);
  report["Du"] = resolvent_json(du);
  std::ostringstream s;
  s << "| quantity | value | std. error | total error | partial |\n|---|---|---|---|---|\n"
    << "| u(x) | " << u.value << " | " << u.std_error << " | " << u.total_error << " | "
    << (u.partial ? "yes" : "no") << " |\n"
    << "| Du(x) h | " << du.value << " | " << du.std_error << " | " << du.total_error << " | "
    << (du.partial ? "yes" : "no") << " |\n";
  md += s.str();
}

void run_evolution(const ExperimentConfig& c, const Header& h, ArtifactSet& out, Json& report,
                   std::string& md) {
  const auto problem = c.problem();
  const auto f = c.test_function(problem.basis);
  const auto x = c.point_field(problem.basis);
  const SourceTerm g{f, c.campaign.source_c0, c.campaign.source_c1, c.campaign.source_omega};
  std::vector<SemigroupEstimate> est;
  for (double t : c.campaign.times) {
    est.push_back(evolution_mild(problem, f, g, t, x, c.resolvent_budget()));
  }
  series_artifacts(est, h, out, report, md, "v(t, x)", nullptr);
}

bool run_regularity(const ExperimentConfig& c, const Header& h, ArtifactSet& out, Json& report,
                    std::string& md) {
  const auto bundle = verify_schauder(c.domain, c.campaign.alpha, c.reaction_spec(), c.solver,
                                      c.schauder_budget());
  std::ostringstream nodes;
  nodes << csv_header(h) << "report,r,statistic,std_error,probe,masked\n";
  Json reports = Json::array();
  bool passed = true;
  std::ostringstream s;
  s << bundle.plan.statement << "\n\n"
    << "| report | target | predicted | measured | 95% CI | R^2 | scales fitted | verdict |\n"
    << "|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : bundle.reports) {
    for (const auto& row : r.scales) {
      nodes << r.name << ',' << num(row.r) << ',' << num(row.statistic) << ','
            << num(row.std_error) << ',' << row.probe << ',' << (row.masked ? 1 : 0) << "\n";
    }
    reports.push_back(Json::parse(to_json(r)));
    passed = passed && r.verdict == Verdict::Pass;
    s << "| " << r.name << " | " << r.target << " | " << r.predicted << " | " << r.exponent
      << " | " << r.ci95 << " | " << r.r2 << " | " << r.fit.points << " | "
      << to_string(r.verdict) << " |\n";
  }
  out.write("nodes.csv", nodes.str());
  Json plan;
  plan["gamma"] = bundle.plan.gamma;
  plan["alpha"] = bundle.plan.alpha ? Json(*bundle.plan.alpha) : Json(nullptr);
  plan["beta"] = bundle.plan.beta;
  plan["target"] = bundle.plan.target;
  plan["order"] = bundle.plan.order;
  plan["predicted"] = bundle.plan.predicted;
  plan["statement"] = bundle.plan.statement;
  report["plan"] = std::move(plan);
  report["partial"] = bundle.partial;
  report["note"] = bundle.note;
  report["reports"] = std::move(reports);
  report["passed"] = passed;
  md += s.str();
  if (bundle.partial) md += "\nPartial bundle: " + bundle.note + "\n";
  return passed;
}

}  // namespace

// ------------------------------------------------------------------ public

std::string code_version() {
#ifdef SPDELAB_VERSION
  return SPDELAB_VERSION;
#else
  return "unknown";
#endif
}

std::string_view to_string(Subcommand s) {
  switch (s) {
    case Subcommand::Simulate: return "simulate";
    case Subcommand::Semigroup: return "semigroup";
    case Subcommand::Gradient: return "gradient";
    case Subcommand::Resolvent: return "resolvent";
    case Subcommand::Evolution: return "evolution";
    case Subcommand::Regularity: return "regularity";
  }
  return "simulate";
}

Subcommand parse_subcommand(std::string_view name) {
  for (auto s : {Subcommand::Simulate, Subcommand::Semigroup, Subcommand::Gradient,
                 Subcommand::Resolvent, Subcommand::Evolution, Subcommand::Regularity}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown subcommand '" + std::string(name) + "'");
}

ReactionSpec ExperimentConfig::reaction_spec() const {
  if (reaction.size() < 2 || reaction.size() % 2 != 0) {
    throw ConfigError("reaction needs 2m+2 coefficients p_0..p_{2m+1}");
  }
  ReactionSpec spec;
  spec.m = static_cast<int>(reaction.size() / 2) - 1;
  for (const auto& terms : reaction) {
    if (terms.empty()) throw ConfigError("reaction coefficient series must not be empty");
    spec.poly.push_back(CosineSeries{terms});
  }
  return spec;
}

Problem ExperimentConfig::problem() const {
  Problem p{SpectralBasis::create(domain), reaction_spec(), solver};
  return p;
}

TestFunction ExperimentConfig::test_function(const BasisPtr& basis) const {
  TestFunction f;
  f.profile = function.profile;
  f.modes = function.ladder ? mode_ladder(*basis) : function.modes;
  f.scale = function.scale;
  f.alpha = function.profile == Profile::Power ? function.alpha : 1.0;
  f.ramp_width = function.width;
  return f;
}

SpectralField ExperimentConfig::point_field(const BasisPtr& basis) const {
  SpectralField x(basis);
  for (const auto& [k, a] : point) {
    if (k >= basis->size()) throw ConfigError("point mode out of range");
    x[k] += a;
  }
  return x;
}

SpectralField ExperimentConfig::direction_field(const BasisPtr& basis) const {
  if (direction_mode >= basis->size()) throw ConfigError("direction mode out of range");
  return direction_sup_normalized ? unit_mode(basis, direction_mode)
                                  : SpectralField::mode(basis, direction_mode);
}

MonteCarloConfig ExperimentConfig::monte_carlo() const {
  MonteCarloConfig mc;
  mc.paths = estimator.paths;
  mc.seed = seed;
  mc.threads = threads;
  mc.t_min = estimator.t_min;
  mc.late_switch = estimator.late_switch;
  mc.late_dt = estimator.late_dt;
  mc.chunk = estimator.chunk;
  return mc;
}

ResolventBudget ExperimentConfig::resolvent_budget() const {
  ResolventBudget b;
  b.mc = monte_carlo();
  b.tolerance = estimator.tolerance;
  b.max_horizon = estimator.max_horizon;
  return b;
}

SchauderBudget ExperimentConfig::schauder_budget() const {
  SchauderBudget b;
  b.resolvent = resolvent_budget();
  b.lambda = estimator.lambda;
  b.scales = dyadic_scales(campaign.scale_first, campaign.scale_last);
  b.stationary = campaign.stationary;
  b.evolution = campaign.evolution;
  b.evolution_time = campaign.evolution_time;
  b.tolerance = campaign.exponent_tolerance;
  b.min_r2 = campaign.min_r2;
  b.mask_ratio = campaign.mask_ratio;
  b.profile_scale = function.scale;
  return b;
}

ExperimentConfig parse_config(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("YAML syntax error: ") + e.what());
  }
  ExperimentConfig c;
  if (!root || root.IsNull()) return c;
  check_keys(root, "config",
             {"name", "seed", "threads", "domain", "reaction", "solver", "estimator", "function",
              "point", "direction", "campaign"});
  read(root, "name", c.name, "config");
  read(root, "seed", c.seed, "config");
  read(root, "threads", c.threads, "config");

  if (auto d = root["domain"]) {
    check_keys(d, "domain", {"dimension", "boundary", "gamma", "modes", "grid"});
    read(d, "dimension", c.domain.dimension, "domain");
    if (d["boundary"]) c.domain.boundary = parse_boundary(d["boundary"].as<std::string>());
    read(d, "gamma", c.domain.gamma, "domain");
    read(d, "modes", c.domain.modes, "domain");
    if (d["grid"]) {
      read(d, "grid", c.domain.grid, "domain");
    } else {
      c.domain.grid = 4 * c.domain.modes;
    }
  }
  if (auto r = root["reaction"]) {
    check_keys(r, "reaction", {"coefficients"});
    if (r["coefficients"]) c.reaction = read_reaction(r["coefficients"]);
  }
  if (auto s = root["solver"]) {
    check_keys(s, "solver", {"dt", "horizon", "bel_window", "blowup_threshold"});
    read(s, "dt", c.solver.dt, "solver");
    read(s, "horizon", c.solver.horizon, "solver");
    read(s, "bel_window", c.solver.bel_window, "solver");
    read(s, "blowup_threshold", c.solver.blowup_threshold, "solver");
  }
  if (auto e = root["estimator"]) {
    check_keys(e, "estimator",
               {"paths", "lambda", "tolerance", "max_horizon", "t_min", "late_switch", "late_dt",
                "chunk", "fd_eps"});
    auto& b = c.estimator;
    read(e, "paths", b.paths, "estimator");
    read(e, "lambda", b.lambda, "estimator");
    read(e, "tolerance", b.tolerance, "estimator");
    read(e, "max_horizon", b.max_horizon, "estimator");
    read(e, "t_min", b.t_min, "estimator");
    read(e, "late_switch", b.late_switch, "estimator");
    read(e, "late_dt", b.late_dt, "estimator");
    read(e, "chunk", b.chunk, "estimator");
    read(e, "fd_eps", b.fd_eps, "estimator");
  }
  if (auto f = root["function"]) {
    check_keys(f, "function", {"profile", "modes", "scale", "alpha", "width"});
    try {
      if (f["profile"]) c.function.profile = parse_profile(f["profile"].as<std::string>());
    } catch (const ConfigError&) {
      throw;
    }
    if (auto m = f["modes"]) {
      if (m.IsScalar() && m.as<std::string>() == "ladder") {
        c.function.ladder = true;
      } else {
        c.function.ladder = false;
        read(f, "modes", c.function.modes, "function");
      }
    }
    read(f, "scale", c.function.scale, "function");
    read(f, "alpha", c.function.alpha, "function");
    read(f, "width", c.function.width, "function");
  }
  if (auto p = root["point"]) {
    if (!p.IsSequence()) throw ConfigError("point must be a list of [mode, amplitude] pairs");
    for (const auto& e : p) {
      try {
        const auto pair = e.as<std::vector<double>>();
        if (pair.size() != 2 || pair[0] < 0 || pair[0] != std::floor(pair[0])) {
          throw ConfigError("point entries must be [mode, amplitude] pairs");
        }
        c.point.emplace_back(static_cast<std::size_t>(pair[0]), pair[1]);
      } catch (const YAML::Exception&) {
        throw ConfigError("point entries must be [mode, amplitude] pairs");
      }
    }
  }
  if (auto d = root["direction"]) {
    check_keys(d, "direction", {"mode", "normalize"});
    read(d, "mode", c.direction_mode, "direction");
    if (d["normalize"]) {
      const auto n = d["normalize"].as<std::string>();
      if (n != "sup" && n != "l2") throw ConfigError("direction.normalize must be sup or l2");
      c.direction_sup_normalized = n == "sup";
    }
  }
  if (auto k = root["campaign"]) {
    check_keys(k, "campaign",
               {"times", "alpha", "scales", "stationary", "evolution", "evolution_time",
                "exponent_tolerance", "min_r2", "mask_ratio", "trajectories", "record_every",
                "record_modes", "source"});
    auto& b = c.campaign;
    read(k, "times", b.times, "campaign");
    b.alpha = read_optional(k, "alpha", b.alpha, "campaign");
    if (auto s = k["scales"]) {
      check_keys(s, "campaign.scales", {"first", "last"});
      read(s, "first", b.scale_first, "campaign.scales");
      read(s, "last", b.scale_last, "campaign.scales");
    }
    read_bool(k, "stationary", b.stationary, "campaign");
    read_bool(k, "evolution", b.evolution, "campaign");
    read(k, "evolution_time", b.evolution_time, "campaign");
    read(k, "exponent_tolerance", b.exponent_tolerance, "campaign");
    read(k, "min_r2", b.min_r2, "campaign");
    read(k, "mask_ratio", b.mask_ratio, "campaign");
    read(k, "trajectories", b.trajectories, "campaign");
    read(k, "record_every", b.record_every, "campaign");
    read(k, "record_modes", b.record_modes, "campaign");
    if (auto s = k["source"]) {
      check_keys(s, "campaign.source", {"c0", "c1", "omega"});
      read(s, "c0", b.source_c0, "campaign.source");
      read(s, "c1", b.source_c1, "campaign.source");
      read(s, "omega", b.source_omega, "campaign.source");
    }
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return parse_config(s.str());
}

std::string canonical_text(const ExperimentConfig& c) {
  std::ostringstream s;
  auto list = [](const auto& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ", ";
      if constexpr (std::is_floating_point_v<std::decay_t<decltype(v[i])>>) {
        out += num(v[i]);
      } else {
        out += std::to_string(v[i]);
      }
    }
    return out + "]";
  };
  s << "name: " << c.name << "\n"
    << "seed: " << c.seed << "\n"
    << "domain: {dimension: " << c.domain.dimension
    << ", boundary: " << to_string(c.domain.boundary) << ", gamma: " << num(c.domain.gamma)
    << ", modes: " << c.domain.modes << ", grid: " << c.domain.grid << "}\n"
    << "reaction: {coefficients: [";
  for (std::size_t i = 0; i < c.reaction.size(); ++i) {
    s << (i ? ", " : "") << list(c.reaction[i]);
  }
  const auto& e = c.estimator;
  s << "]}\n"
    << "solver: {dt: " << num(c.solver.dt) << ", horizon: " << num(c.solver.horizon)
    << ", bel_window: " << num(c.solver.bel_window)
    << ", blowup_threshold: " << num(c.solver.blowup_threshold) << "}\n"
    << "estimator: {paths: " << e.paths << ", lambda: " << num(e.lambda)
    << ", tolerance: " << num(e.tolerance) << ", max_horizon: " << num(e.max_horizon)
    << ", t_min: " << num(e.t_min) << ", late_switch: " << num(e.late_switch)
    << ", late_dt: " << num(e.late_dt) << ", chunk: " << e.chunk << ", fd_eps: " << num(e.fd_eps)
    << "}\n"
    << "function: {profile: " << to_string(c.function.profile)
    << ", modes: " << (c.function.ladder ? std::string("ladder") : list(c.function.modes))
    << ", scale: " << num(c.function.scale) << ", alpha: " << num(c.function.alpha)
    << ", width: " << num(c.function.width) << "}\n"
    << "point: [";
  for (std::size_t i = 0; i < c.point.size(); ++i) {
    s << (i ? ", " : "") << "[" << c.point[i].first << ", " << num(c.point[i].second) << "]";
  }
  const auto& k = c.campaign;
  s << "]\n"
    << "direction: {mode: " << c.direction_mode
    << ", normalize: " << (c.direction_sup_normalized ? "sup" : "l2") << "}\n"
    << "campaign: {times: " << list(k.times)
    << ", alpha: " << (k.alpha ? num(*k.alpha) : std::string("none"))
    << ", scales: {first: " << k.scale_first << ", last: " << k.scale_last << "}"
    << ", stationary: " << (k.stationary ? "true" : "false")
    << ", evolution: " << (k.evolution ? "true" : "false")
    << ", evolution_time: " << num(k.evolution_time)
    << ", exponent_tolerance: " << num(k.exponent_tolerance) << ", min_r2: " << num(k.min_r2)
    << ", mask_ratio: " << num(k.mask_ratio) << ", trajectories: " << k.trajectories
    << ", record_every: " << k.record_every << ", record_modes: " << k.record_modes
    << ", source: {c0: " << num(k.source_c0) << ", c1: " << num(k.source_c1)
    << ", omega: " << num(k.source_omega) << "}}\n";
  return s.str();
}

std::uint64_t config_fingerprint(const ExperimentConfig& c) {
  return fnv1a("schema=" + std::to_string(kArtifactSchema) + "\n" + canonical_text(c));
}

std::string ValidationReport::to_json() const {
  Json j;
  j["valid"] = ok();
  j["violations"] = violations;
  return j.dump(2) + "\n";
}

ValidationReport validate(const ExperimentConfig& c) {
  ValidationReport rep;
  auto& v = rep.violations;
  auto add = [&v](const std::string& where, const std::string& what) {
    v.push_back(where + ": " + what);
  };

  const auto domain_issues = domain_violations(c.domain);
  for (const auto& s : domain_issues) add("domain", s);

  std::optional<ReactionSpec> reaction;
  try {
    reaction = c.reaction_spec();
  } catch (const ConfigError& e) {
    add("reaction", e.what());
  }
  if (reaction) {
    const auto structural = reaction_violations(*reaction);
    for (const auto& s : structural) add("reaction", s);
    if (structural.empty() && reaction->m >= 1) {
      const auto d = validate_dissipativity(*reaction);
      if (!d.accepted) add("reaction", "not dissipative: " + d.explanation);
    }
  }

  if (!(c.solver.dt > 0.0)) add("solver", "dt must be positive");
  if (!(c.solver.horizon >= c.solver.dt)) add("solver", "horizon must be at least dt");
  if (!(c.solver.bel_window > 0.0)) add("solver", "bel_window must be positive");
  if (!(c.solver.blowup_threshold > 0.0)) add("solver", "blowup_threshold must be positive");
  BasisPtr basis;
  if (domain_issues.empty()) {
    basis = SpectralBasis::create(c.domain);
    const double lmax = basis->largest_eigenvalue();
    if (c.solver.dt * lmax > SolverConfig::kMaxStiffness) {
      add("solver", "dt * lambda_max = " + num(c.solver.dt * lmax) + " exceeds " +
                        num(SolverConfig::kMaxStiffness));
    }
    if (c.estimator.late_dt * lmax > SolverConfig::kMaxStiffness) {
      add("estimator", "late_dt * lambda_max exceeds " + num(SolverConfig::kMaxStiffness));
    }
  }

  const auto& e = c.estimator;
  if (e.paths < 2) add("estimator", "paths must be at least 2");
  if (!(e.lambda > 0.0)) add("estimator", "lambda must be positive");
  if (!(e.tolerance > 0.0)) add("estimator", "tolerance must be positive");
  if (!(e.max_horizon >= 1.0)) add("estimator", "max_horizon must be at least 1");
  if (!(e.t_min > 0.0 && e.t_min <= c.solver.dt)) add("estimator", "t_min must lie in (0, dt]");
  if (!(e.late_dt == 0.0 || e.late_dt >= c.solver.dt)) {
    add("estimator", "late_dt must be 0 or at least dt");
  }
  if (!(e.late_switch > 0.0)) add("estimator", "late_switch must be positive");
  if (e.chunk < 1) add("estimator", "chunk must be at least 1");
  if (!(e.fd_eps >= 0.0)) add("estimator", "fd_eps must be non-negative");

  const auto& f = c.function;
  if (!(f.scale > 0.0)) add("function", "scale must be positive");
  if (f.profile == Profile::Power && !(f.alpha > 0.0 && f.alpha <= 1.0)) {
    add("function", "alpha must lie in (0, 1]");
  }
  if (f.profile == Profile::Ramp && !(f.width > 0.0)) add("function", "width must be positive");
  if (basis) {
    const auto n = basis->size();
    if (!f.ladder) {
      if (f.modes.empty()) add("function", "modes must not be empty");
      for (auto k : f.modes) {
        if (k >= n) add("function", "mode " + std::to_string(k) + " is beyond the cutoff");
      }
    }
    for (const auto& [k, a] : c.point) {
      if (k >= n) add("point", "mode " + std::to_string(k) + " is beyond the cutoff");
      if (!std::isfinite(a)) add("point", "amplitudes must be finite");
    }
    if (c.direction_mode >= n) add("direction", "mode is beyond the cutoff");
    if (c.campaign.record_modes < 1) add("campaign", "record_modes must be at least 1");
  }

  const auto& k = c.campaign;
  for (double t : k.times) {
    if (!(t >= 0.0 && std::isfinite(t))) add("campaign", "times must be finite and non-negative");
  }
  if (k.times.empty()) add("campaign", "times must not be empty");
  if (k.alpha && !(*k.alpha > 0.0 && *k.alpha < 1.0)) add("campaign", "alpha must lie in (0, 1)");
  if (k.scale_first < 0 || k.scale_first >= k.scale_last) {
    add("campaign", "scales need 0 <= first < last");
  }
  if (!(k.evolution_time > 0.0)) add("campaign", "evolution_time must be positive");
  if (!(k.mask_ratio > 0.0)) add("campaign", "mask_ratio must be positive");
  if (!(k.exponent_tolerance > 0.0)) add("campaign", "exponent_tolerance must be positive");
  if (k.trajectories < 1) add("campaign", "trajectories must be at least 1");
  if (c.threads < 1) add("config", "threads must be at least 1");
  return rep;
}

CampaignOutcome run_campaign(Subcommand sub, const ExperimentConfig& config,
                             const fs::path& out_dir) {
  const auto rep = validate(config);
  if (!rep.ok()) {
    std::string msg = "invalid configuration:";
    for (const auto& s : rep.violations) msg += "\n  - " + s;
    throw ConfigError(msg);
  }
  if (sub == Subcommand::Regularity && config.domain.dimension != 1) {
    throw ConfigError("regularity campaigns probe the mode ladder of d = 1");
  }
  const Header h{hex(config_fingerprint(config)), config.seed, std::string(to_string(sub))};
  ArtifactSet out(out_dir);
  Json report = json_header(h, config);
  std::string md = md_header(h, config);
  CampaignOutcome outcome;
  switch (sub) {
    case Subcommand::Simulate: run_simulate(config, h, out, report, md); break;
    case Subcommand::Semigroup: run_semigroup(config, h, out, report, md); break;
    case Subcommand::Gradient: run_gradient(config, h, out, report, md); break;
    case Subcommand::Resolvent: run_resolvent(config, h, out, report, md); break;
    case Subcommand::Evolution: run_evolution(config, h, out, report, md); break;
    case Subcommand::Regularity: outcome.passed = run_regularity(config, h, out, report, md); break;
  }
  out.write("report.json", report.dump(2) + "\n");
  out.write("summary.md", md);
  outcome.artifacts = out.take();
  return outcome;
}

std::string summarize(std::span<const fs::path> dirs) {
  std::ostringstream s;
  s << "# Campaign summary\n\n"
    << "| campaign | subcommand | quantity | predicted | measured | 95% CI | R^2 | verdict | "
       "fingerprint |\n"
    << "|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& dir : dirs) {
    std::ifstream in(dir / "report.json", std::ios::binary);
    if (!in) throw ConfigError("no report.json in " + dir.string());
    Json j;
    try {
      j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("unreadable report.json in " + dir.string() + ": " + e.what());
    }
    const auto name = j.value("name", dir.filename().string());
    const auto sub = j.value("subcommand", std::string("?"));
    const auto fp = j.value("fingerprint", std::string("?"));
    if (sub == "regularity") {
      for (const auto& r : j["reports"]) {
        s << "| " << name << " | " << sub << " | " << r["target"].get<std::string>() << " | "
          << r["predicted"].get<double>() << " | " << r["exponent"].get<double>() << " | "
          << r["ci95"].get<double>() << " | " << r["r2"].get<double>() << " | "
          << r["verdict"].get<std::string>() << " | `" << fp << "` |\n";
      }
    } else if (sub == "resolvent") {
      for (const char* q : {"u", "Du"}) {
        s << "| " << name << " | " << sub << " | " << q << " | | " << j[q]["value"].get<double>()
          << " | " << 1.96 * j[q]["std_error"].get<double>() << " | | | `" << fp << "` |\n";
      }
    } else if (j.contains("estimates")) {
      for (const auto& e : j["estimates"]) {
        s << "| " << name << " | " << sub << " | t = " << e["t"].get<double>() << " | | "
          << e["value"].get<double>() << " | " << 1.96 * e["std_error"].get<double>()
          << " | | | `" << fp << "` |\n";
      }
    } else {
      s << "| " << name << " | " << sub << " | | | | | | | `" << fp << "` |\n";
    }
  }
  return s.str();
}

}  // namespace spdelab
