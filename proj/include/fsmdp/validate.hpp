#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "fsmdp/core.hpp"
#include "fsmdp/environment.hpp"
#include "fsmdp/optimism.hpp"

// Brute-force reference implementations. None of these call into the
// elimination, propagation or greedy-marginal code they are used to check.

namespace fsmdp {

/// A fully enumerated finite-horizon MDP.
struct TabularMdp {
  FactoredSpace space;
  int tau = 1;
  std::size_t states = 0;
  /// reward[s * A + a]
  std::vector<double> reward;
  /// transition[(s * A + a) * states + s']
  std::vector<double> transition;
};

/// Enumerates `env` into dense tables; refuses joint sizes above 2^14.
TabularMdp tabulate(const Environment& env, std::uint64_t limit = std::uint64_t{1} << 14);

/// V_l(s) for l = 1..tau+1 by backward induction; values[tau] is all zeros.
struct TabularValueFunction {
  int tau = 1;
  std::vector<std::vector<double>> values;

  double at(int step, std::size_t state) const { return values[static_cast<std::size_t>(step - 1)][state]; }
};

TabularValueFunction tabular_vi(const TabularMdp& mdp);
TabularValueFunction tabular_vi(const Environment& env);

/// Value of a step-dependent deterministic policy policy[(l-1) * states + s].
TabularValueFunction policy_evaluation(const TabularMdp& mdp, std::span<const int> policy);

/// max over joint states of the bracket for (action, step), with the first
/// arg-max in rank order. Refuses joint sizes above 2^14.
std::pair<double, State> brute_force_bracket_max(const WeightMatrix& w, const OptimisticTables& tables, int action,
                                                 int step);

/// Largest bracket over every (state, action, step); <= 0 means w satisfies
/// every planning constraint.
double exhaustive_max_violation(const WeightMatrix& w, const OptimisticTables& tables);

/// Maximizes sign * sum h P over {P in simplex : |P - empirical|_1 <= 2 half_width}
/// by enumerating the vertices of the lifted polytope in (P, d). Supports <= 5.
Distribution vertex_enum_transition_opt(std::span<const double> empirical, double half_width,
                                        std::span<const double> h, Sign sign);

struct ExhaustivePlan {
  WeightMatrix w;
  double objective = 0.0;
};

/// Solves the planning LP with every (s, a, step) constraint written out and
/// the L1 bound W on each step. Joint size <= 2^8, tau <= 3.
ExhaustivePlan exhaustive_lp_plan(const OptimisticTables& tables, double W);

/// sum_s sum_j w^{(1)}_j h_j(s) by enumerating states.
double naive_objective(const WeightMatrix& w, const FactoredSpace& space, const Basis& basis);

}  // namespace fsmdp
