#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "fsmdp/environment.hpp"
#include "fsmdp/estimation.hpp"
#include "fsmdp/optimism.hpp"
#include "fsmdp/planner.hpp"
#include "fsmdp/random.hpp"

namespace fsmdp {

/// argmax_a sum_i Rbar_i(s, a) + sum_j w^{(step+1)}_j E_j(s, a); ties to the lowest action.
int greedy_action(const WeightMatrix& w, const OptimisticTables& tables, std::span<const int> state, int step);

struct Trajectory {
  std::vector<State> states;
  std::vector<int> actions;
  std::vector<std::vector<double>> rewards;
  double total_reward = 0.0;
};

/// One episode of tau steps from a fresh reset, recording every step into `confidence`.
Trajectory run_episode(const Environment& env, const WeightMatrix& w, const OptimisticTables& tables,
                       ConfidenceState& confidence, Rng& rng);

/// Reference regret bound:
/// tau * 30 phi W G sqrt(T J (J log 2 + log(2 N zeta T^2 / delta))).
/// Throws ConfigError when W G < 1.
double theoretical_bound(double phi, double tau, double W, double G, double T, double J, double N, double zeta,
                         double delta);

/// The bound's structural constants read off a model structure.
struct BoundParams {
  double phi = 1, tau = 1, W = 1, G = 1, J = 1, N = 1, zeta = 1;
};
BoundParams bound_params(const ModelStructure& structure, double W);
/// Bound after `episodes` episodes (T = episodes * tau).
double theoretical_bound(const BoundParams& p, double episodes, double delta);

struct TraceRow {
  std::uint64_t k = 0;
  double realized_reward = 0.0;
  /// V*_1 at the episode's start state when the state space is enumerable.
  std::optional<double> optimal_value;
  double regret = 0.0;
  /// True when `regret` is the realized-reward proxy rather than exact.
  bool proxy = false;
  double cumulative_regret = 0.0;
  /// Unset when W G < 1, where the formula does not apply.
  std::optional<double> bound;
  double epsilon = 0.0;
  bool model_covered = false;
};

struct RegretTrace {
  std::vector<TraceRow> rows;
};

struct LearnerOptions {
  double delta = 0.1;
  /// Subgaussian scale used by the reward widths.
  double sigma = 1.0;
  PlannerOptions planner;
  /// Exact regret when the joint state space has at most this many states.
  std::uint64_t exact_limit = std::uint64_t{1} << 14;
  /// Record whether the true model lies in the confidence set each episode.
  bool track_coverage = false;
};

/// Exact finite-horizon evaluation of the greedy policy induced by (w, tables),
/// plus the optimal values, over an enumerable environment.
class ExactEvaluator {
 public:
  ExactEvaluator(const Environment& env, std::uint64_t limit);

  /// V*_1(s) for every joint state, in rank order.
  const std::vector<double>& optimal_values() const { return v_star_; }
  double optimal_value(std::span<const int> state) const;
  /// V^{mu}_1 at `state` for the greedy policy of (w, tables).
  double policy_value(const WeightMatrix& w, const OptimisticTables& tables, std::span<const int> state) const;

 private:
  struct Row {
    std::vector<std::uint32_t> next;
    std::vector<double> prob;
    double reward;
  };
  const Row& row(std::size_t s, int a) const { return rows_[s * static_cast<std::size_t>(actions_) + a]; }

  FactoredSpace space_;
  int tau_;
  int actions_;
  std::vector<Row> rows_;
  std::vector<double> v_star_;
};

/// Episode-at-a-time UCRL loop. `snapshot` allows resuming from saved counts.
class Learner {
 public:
  Learner(const Environment& env, std::shared_ptr<const ModelStructure> structure, LearnerOptions options,
          std::uint64_t seed);

  /// Runs episodes k = next_episode() .. K, calling `on_row` after each.
  RegretTrace run(std::uint64_t K, const std::function<void(const TraceRow&)>& on_row = {});
  TraceRow step_episode();

  std::uint64_t next_episode() const { return k_ + 1; }
  const ConfidenceState& confidence() const { return conf_; }
  bool exact() const { return evaluator_.has_value(); }
  const BoundParams& bound_parameters() const { return bound_; }

  /// Counts, RNG state and running totals for resumption.
  nlohmann::json snapshot() const;
  void restore(const nlohmann::json& snap);

 private:
  const Environment& env_;
  std::shared_ptr<const ModelStructure> structure_;
  LearnerOptions opt_;
  Planner planner_;
  ConfidenceState conf_;
  Rng rng_;
  std::optional<ExactEvaluator> evaluator_;
  std::optional<FsmdpModel> truth_;
  BoundParams bound_;
  std::uint64_t k_ = 0;
  double cumulative_ = 0.0;
  double reward_total_ = 0.0;
  double best_average_ = -std::numeric_limits<double>::infinity();
};

}  // namespace fsmdp
