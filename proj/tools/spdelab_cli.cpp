#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "json.hpp"
#include "spdelab/campaign.hpp"
#include "spdelab/error.hpp"

namespace {

using spdelab::Subcommand;

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kDomain = 3, kBlowUp = 4, kVerdict = 5 };

int diagnose(const char* kind, const std::string& message, int code,
             std::optional<std::pair<double, double>> where = std::nullopt) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  if (where) {
    j["time"] = where->first;
    j["sup_norm"] = where->second;
  }
  j["exit_code"] = code;
  std::cerr << j.dump() << "\n";
  return code;
}

struct RunOptions {
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::size_t> paths;
};

spdelab::ExperimentConfig load(const RunOptions& o) {
  auto c = spdelab::load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.threads = *o.threads;
  if (o.paths) c.estimator.paths = *o.paths;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo campaigns for dissipative SPDEs with degenerate noise"};
  app.require_subcommand(1);
  app.set_version_flag("--version", spdelab::code_version());

  RunOptions run;
  std::vector<std::pair<CLI::App*, Subcommand>> runners;
  const std::pair<const char*, const char*> help[] = {
      {"simulate", "sample trajectories; moments per node"},
      {"semigroup", "P(t) f(x) at the configured times"},
      {"gradient", "D P(t) f(x) h by the Bismut-Elworthy-Li weight"},
      {"resolvent", "u = R(lambda) f and Du at the configured point"},
      {"evolution", "mild solution of the evolution problem"},
      {"regularity", "Hoelder/Zygmund exponents of u and v_2"},
  };
  for (const auto& [name, text] : help) {
    auto* sub = app.add_subcommand(name, text);
    sub->add_option("config", run.config, "YAML experiment config")->required()->check(
        CLI::ExistingFile);
    sub->add_option("--out-dir,-o", run.out_dir, "artifact directory")->required();
    sub->add_option("--seed", run.seed, "override the config seed");
    sub->add_option("--threads,-j", run.threads, "worker threads (artifacts do not depend on it)");
    sub->add_option("--paths", run.paths, "override estimator.paths");
    runners.emplace_back(sub, spdelab::parse_subcommand(name));
  }

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "check a config against all hypotheses");
  validate->add_option("config", validate_path, "YAML experiment config")
      ->required()
      ->check(CLI::ExistingFile);

  std::vector<std::string> report_dirs;
  std::string report_out;
  auto* report = app.add_subcommand("report", "markdown table over artifact directories");
  report->add_option("dirs", report_dirs, "artifact directories")->required();
  report->add_option("--output,-o", report_out, "write the table here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return diagnose("usage", e.what(), kConfig);
  }

  try {
    if (*validate) {
      const auto rep = spdelab::validate(spdelab::load_config(validate_path));
      std::cout << rep.to_json();
      return rep.ok() ? kOk : kConfig;
    }
    if (*report) {
      std::vector<std::filesystem::path> dirs(report_dirs.begin(), report_dirs.end());
      const auto table = spdelab::summarize(dirs);
      if (report_out.empty()) {
        std::cout << table;
      } else {
        std::ofstream(report_out, std::ios::binary) << table;
      }
      return kOk;
    }
    for (const auto& [sub, kind] : runners) {
      if (!*sub) continue;
      const auto outcome = spdelab::run_campaign(kind, load(run), run.out_dir);
      for (const auto& p : outcome.artifacts) std::cout << p.string() << "\n";
      return outcome.passed ? kOk : kVerdict;
    }
  } catch (const spdelab::ConfigError& e) {
    return diagnose("config", e.what(), kConfig);
  } catch (const spdelab::DomainError& e) {
    return diagnose("domain", e.what(), kDomain);
  } catch (const spdelab::BlowUpError& e) {
    return diagnose("blowup", e.what(), kBlowUp, std::pair{e.time(), e.sup_norm()});
  } catch (const std::exception& e) {
    return diagnose("internal", e.what(), kFailure);
  }
  return kFailure;
}
