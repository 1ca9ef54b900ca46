#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spdelab/regularity.hpp"

namespace spdelab {

/// Version of the CSV column sets and JSON layouts written by campaigns.
inline constexpr int kArtifactSchema = 1;

std::string code_version();

enum class Subcommand { Simulate, Semigroup, Gradient, Resolvent, Evolution, Regularity };
std::string_view to_string(Subcommand s);
Subcommand parse_subcommand(std::string_view name);

struct FunctionBlock {
  Profile profile = Profile::Cosine;
  bool ladder = false;  // modes = mode_ladder(basis)
  std::vector<std::size_t> modes{0};
  double scale = 1.0;
  double alpha = 0.5;
  double width = 1e-8;
};

struct EstimatorBlock {
  std::size_t paths = 1000;
  double lambda = 1.0;
  double tolerance = 1e-2;
  double max_horizon = 50.0;
  double t_min = 1e-6;
  double late_switch = 1.0;
  double late_dt = 0.0;
  std::size_t chunk = 64;
  /// Central-difference step for the gradient cross-check (0 disables it).
  double fd_eps = 0.0;
};

struct CampaignBlock {
  std::vector<double> times{0.1, 0.5, 1.0};
  std::optional<double> alpha;
  int scale_first = 1;
  int scale_last = 7;
  bool stationary = true;
  bool evolution = false;
  double evolution_time = 1.0;
  double exponent_tolerance = 0.15;
  double min_r2 = 0.9;
  double mask_ratio = 0.25;
  std::size_t trajectories = 16;
  std::size_t record_every = 0;  // 0: about 100 records per path
  std::size_t record_modes = 4;
  double source_c0 = 1.0;
  double source_c1 = 0.0;
  double source_omega = 0.0;
};

/// One archival experiment. `threads` only changes wall time, never artifacts,
/// and is left out of the fingerprint.
struct ExperimentConfig {
  std::string name = "campaign";
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  DomainSpec domain;
  /// p_0 .. p_{2m+1}, each a cosine series in xi (one entry = constant).
  std::vector<std::vector<double>> reaction{{0.0}, {0.0}};
  SolverConfig solver;
  EstimatorBlock estimator;
  FunctionBlock function;
  std::vector<std::pair<std::size_t, double>> point;  // (mode, amplitude)
  std::size_t direction_mode = 0;
  bool direction_sup_normalized = true;
  CampaignBlock campaign;

  ReactionSpec reaction_spec() const;
  Problem problem() const;
  TestFunction test_function(const BasisPtr& basis) const;
  SpectralField point_field(const BasisPtr& basis) const;
  SpectralField direction_field(const BasisPtr& basis) const;
  MonteCarloConfig monte_carlo() const;
  ResolventBudget resolvent_budget() const;
  SchauderBudget schauder_budget() const;
};

/// Parses the YAML text of a config. Unknown keys and wrong types are
/// ConfigErrors; range checks are left to validate().
ExperimentConfig parse_config(std::string_view yaml);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every key with its effective value in a fixed order (threads excluded).
std::string canonical_text(const ExperimentConfig& config);
std::uint64_t config_fingerprint(const ExperimentConfig& config);

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
  std::string to_json() const;
};

/// Runs all hypothesis and budget checks and lists every violated clause.
ValidationReport validate(const ExperimentConfig& config);

struct CampaignOutcome {
  std::vector<std::filesystem::path> artifacts;
  /// Regularity only: every report passed.
  bool passed = true;
};

/// Validates, runs one subcommand and writes its artifacts into `out_dir`.
CampaignOutcome run_campaign(Subcommand subcommand, const ExperimentConfig& config,
                             const std::filesystem::path& out_dir);

/// Markdown table of predicted against measured exponents (and the headline
/// numbers of other campaigns) for artifact directories holding report.json.
std::string summarize(std::span<const std::filesystem::path> dirs);

}  // namespace spdelab
