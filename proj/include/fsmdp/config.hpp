#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsmdp/environment.hpp"
#include "fsmdp/learner.hpp"
#include "fsmdp/model.hpp"

namespace fsmdp {

/// Everything one experiment needs. The environment is kept as JSON (either an
/// inline description or a generator call) and materialized by build_experiment.
struct ExperimentConfig {
  nlohmann::json environment;
  /// Explicit basis; generators supply their own when this is unset.
  std::optional<nlohmann::json> basis;
  /// Explicit elimination order, or min-degree when unset.
  std::optional<std::vector<int>> order;
  double W = 0.0;
  double delta = 0.1;
  double sigma = 1.0;
  double C = 1.0;
  std::uint64_t K = 1;
  std::vector<std::uint64_t> seeds;
  std::string output_dir = "results";
  int workers = 1;
  bool rho_weighted_objective = false;
  bool unclipped_reward_optimism = false;
  bool track_coverage = false;
  bool planner_trace = false;
  OracleSolver solver = OracleSolver::Propagation;
  std::uint64_t exact_limit = std::uint64_t{1} << 14;
  std::size_t max_width = 16;
  std::uint64_t checkpoint_every = 1000;
};

/// Reads and validates a config file. Errors name the offending field; parse
/// errors carry line and column.
ExperimentConfig load_config(const std::filesystem::path& path);
/// Validates an already parsed document. `base_dir` resolves environment file references.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = ".");
nlohmann::json serialize_config(const ExperimentConfig& config);

struct Experiment {
  std::shared_ptr<const Environment> env;
  std::vector<BasisFunction> basis;
  double G = 1.0;
  std::shared_ptr<const ModelStructure> structure;
};

/// Builds the environment and structure and checks scope consistency.
Experiment build_experiment(const ExperimentConfig& config);

/// Rejects a basis whose value scopes do not coincide with the transition
/// cluster scopes, or whose parent scopes miss a cluster parent.
void check_scope_consistency(const Environment& env, const std::vector<BasisFunction>& basis);

LearnerOptions learner_options(const ExperimentConfig& config);

}  // namespace fsmdp
