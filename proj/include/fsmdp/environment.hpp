#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "fsmdp/core.hpp"
#include "fsmdp/model.hpp"
#include "fsmdp/random.hpp"

namespace fsmdp {

/// One individually observed reward component R_i over Z_i^R x A.
struct RewardComponentSpec {
  Scope scope;
  /// mean[a * |Val(Z)| + z]
  std::vector<double> mean;
  double sigma = 0.0;
  /// Means are declared to lie in [lower, upper]; upper is the bound C.
  double lower = 0.0;
  double upper = 1.0;
};

/// Conditional table P(s'[scope] | s[parents], a) for one cluster of variables.
/// Either dense (`table[(a * |Val(Pa)| + z) * |Val(scope)| + outcome]`) or
/// deterministic (`successor[a * |Val(Pa)| + z]` = outcome rank).
struct Cluster {
  Scope scope;
  Scope parents;
  std::vector<double> table;
  std::vector<std::uint32_t> successor;

  bool deterministic() const { return !successor.empty(); }
};

/// Clusters partitioning the state variables, sampled independently.
struct ProductTransition {
  std::vector<Cluster> clusters;
};

/// Product form is a mixture with a single component of weight 1.
struct JointTransitionSpec {
  enum class Form { Product, Mixture };
  Form form = Form::Product;
  std::vector<double> weights;
  std::vector<ProductTransition> components;

  static JointTransitionSpec product(ProductTransition p) { return {Form::Product, {1.0}, {std::move(p)}}; }
};

struct InitialDistribution {
  enum class Kind { Uniform, Point, Product };
  Kind kind = Kind::Uniform;
  State point;
  /// Per-variable marginals for the product form.
  std::vector<std::vector<double>> probs;
};

struct StepResult {
  State next_state;
  /// One observation per reward component, never summed.
  std::vector<double> rewards;
};

/// A ground-truth FSMDP simulator. Immutable after construction.
class Environment {
 public:
  Environment(FactoredSpace space, std::vector<RewardComponentSpec> rewards, JointTransitionSpec transition,
              InitialDistribution rho, int tau);

  const FactoredSpace& space() const { return space_; }
  int tau() const { return tau_; }
  const std::vector<RewardComponentSpec>& rewards() const { return rewards_; }
  const JointTransitionSpec& transition() const { return transition_; }
  const InitialDistribution& initial() const { return rho_; }
  std::vector<Scope> reward_scopes() const;
  /// Cluster scopes of the first mixture component (all components share them).
  std::vector<Scope> cluster_scopes() const;

  State reset(Rng& rng) const;
  State reset(std::uint64_t seed) const;
  StepResult step(const State& state, int action, Rng& rng) const;

  /// Exact P_j(. | z, a) over Val(value_scope) for parent assignment z over
  /// `parent_scope`. Throws ConfigError if `value_scope` is not a union of
  /// clusters or the clusters condition on variables outside `parent_scope`.
  Distribution marginalize(const Scope& value_scope, const Scope& parent_scope, std::span<const int> parent_values,
                           int action) const;

  /// Expected total reward of (s, a), summed over components.
  double expected_reward(std::span<const int> state, int action) const;
  /// Full joint P(. | s, a) in rank order; brute-force scale only.
  std::vector<double> transition_row(std::span<const int> state, int action) const;
  /// rho(state).
  double initial_probability(std::span<const int> state) const;

  /// Ground truth (R, P) expressed over `structure`'s scopes.
  FsmdpModel to_model(std::shared_ptr<const ModelStructure> structure) const;

 private:
  struct ClusterIndex {
    ScopeIndexer parents;
    ScopeIndexer outcomes;
  };
  double cluster_prob(std::size_t c, std::size_t k, std::span<const int> state, int action,
                      std::span<const int> next) const;

  FactoredSpace space_;
  std::vector<RewardComponentSpec> rewards_;
  std::vector<ScopeIndexer> reward_idx_;
  JointTransitionSpec transition_;
  std::vector<std::vector<ClusterIndex>> cluster_idx_;
  InitialDistribution rho_;
  int tau_;
};

/// Two-state environment in the penalty variant: state 0 is the penalized
/// state s, state 1 is s'. Action 0 is risky (mean reward -1 at s), action 1
/// is safe (reward 0 everywhere), so V* is identically 0.
struct TwoStateParams {
  double sigma = 0.5;
  int tau = 2;
  double risky_escape = 0.6;
  double safe_escape = 0.3;
  double relapse = 0.2;
};

/// An environment together with a basis it is meant to be learned with.
struct GeneratedEnvironment {
  Environment env;
  std::vector<BasisFunction> basis;
  double G = 1.0;
};

GeneratedEnvironment make_two_state_env(const TwoStateParams& params = {});

/// The safe-action family on 2^m states (m binary variables), tau = 1:
/// action 0 moves every state to S_opt with reward 0; action 1 moves state i
/// to a uniformly drawn j(i) != opt with reward drawn uniformly from {-1, -1/2}.
GeneratedEnvironment make_safe_action_family(int m, std::uint64_t seed);

}  // namespace fsmdp
