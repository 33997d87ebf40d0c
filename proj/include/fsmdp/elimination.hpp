#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "fsmdp/core.hpp"
#include "fsmdp/model.hpp"
#include "fsmdp/optimism.hpp"

namespace fsmdp {

/// Undirected co-occurrence graph over the state variables.
class CostNetwork {
 public:
  CostNetwork(std::size_t var_count, const std::vector<Scope>& scopes);

  std::size_t var_count() const { return adj_.size(); }
  bool adjacent(int u, int v) const { return adj_[u][v]; }
  std::size_t degree(int v) const;
  std::size_t edge_count() const;
  /// Variables that appear in at least one scope.
  const std::vector<bool>& used() const { return used_; }

 private:
  std::vector<std::vector<bool>> adj_;
  std::vector<bool> used_;
};

/// Scopes the planner eliminates over: every Z_i^R and every Z_j^h u Pa(Z_j^h).
std::vector<Scope> planner_scopes(const ModelStructure& structure);

struct EliminationOrder {
  std::vector<int> order;
  std::size_t width = 0;
};

/// Largest neighbor set met while eliminating along `order` (a permutation of the variables).
std::size_t induced_width(const std::vector<int>& order, const CostNetwork& network);

/// Greedy min-degree order; ties go to the smaller degree in the original
/// network, then the lowest index. Throws ConfigError if the
/// resulting width exceeds `max_width`.
EliminationOrder min_degree_order(const CostNetwork& network, std::size_t max_width = 16);

/// Validates an explicit order against `network` and records its width.
EliminationOrder explicit_order(std::vector<int> order, const CostNetwork& network);

/// A block of u-variables, one per assignment of `scope`.
struct LpFunction {
  enum class Kind { Reward, Basis, Eliminated };
  Kind kind;
  /// Reward index i, basis index j, or the eliminated state variable.
  std::size_t source;
  Scope scope;
  std::size_t first_var;
  std::size_t size;
};

/// u_lhs >= sum(u_rhs), introduced when `eliminated_var` takes `eliminated_value`.
struct MaxConstraint {
  std::size_t lhs;
  std::vector<std::size_t> rhs;
  int eliminated_var;
  int eliminated_value;
};

/// The flattened oracle LP for one (action, step):
///   minimize sum of the terminal u-variables
///   s.t. u_v = seed_value[v] for every seed variable v, and every MaxConstraint.
struct ConstraintSystem {
  int action = 0;
  int step = 1;
  std::size_t var_count = 0;
  std::vector<LpFunction> functions;
  std::vector<bool> is_seed;
  std::vector<double> seed_value;
  std::vector<MaxConstraint> constraints;
  /// Constraint range [begin, end) introduced by each elimination step.
  std::vector<std::pair<std::size_t, std::size_t>> step_constraints;
  /// Function created by each elimination step, aligned with `eliminated`.
  std::vector<std::size_t> step_function;
  std::vector<int> eliminated;
  std::vector<std::size_t> terminal_vars;

  std::size_t seed_count() const;
  /// Human-readable dump.
  std::string to_text(const FactoredSpace& space) const;
};

/// Scope bookkeeping shared by every (w, action, step) instance over one structure and order.
class EliminationTemplate {
 public:
  EliminationTemplate(std::shared_ptr<const ModelStructure> structure, const EliminationOrder& order);

  const ModelStructure& structure() const { return *structure_; }
  const EliminationOrder& order() const { return order_; }
  /// Symbolic system (seed values unset).
  const ConstraintSystem& skeleton() const { return skeleton_; }

  /// Fills the seed values for (w, step, action) from `tables`.
  ConstraintSystem instantiate(const WeightMatrix& w, int step, int action, const OptimisticTables& tables) const;
  /// Writes the seed values into an existing instance of this template's skeleton.
  void fill_seeds(ConstraintSystem& system, const WeightMatrix& w, int step, int action,
                  const OptimisticTables& tables) const;

  /// sum over elimination steps of |Val(residual)| * card(eliminated).
  std::size_t constraint_bound() const;

 private:
  std::shared_ptr<const ModelStructure> structure_;
  EliminationOrder order_;
  ConstraintSystem skeleton_;
  /// For basis seed block j: per seed rank, the rank in Val(Z_j^h) and in Val(Pa_j).
  std::vector<std::vector<std::size_t>> basis_value_rank_;
  std::vector<std::vector<std::size_t>> basis_parent_rank_;
  std::vector<std::size_t> reward_block_;
  std::vector<std::size_t> basis_block_;
};

/// One-shot convenience over EliminationTemplate.
ConstraintSystem generate_constraints(const WeightMatrix& w, int step, int action, const OptimisticTables& tables,
                                      const EliminationOrder& order);

}  // namespace fsmdp
