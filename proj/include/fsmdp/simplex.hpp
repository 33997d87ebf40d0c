#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "fsmdp/elimination.hpp"

namespace fsmdp {

/// min cost.x subject to linear rows; variables are nonnegative unless marked free.
struct LinearProgram {
  enum class Sense { Le, Ge, Eq };
  struct Row {
    std::vector<std::pair<std::size_t, double>> terms;
    Sense sense;
    double rhs;
  };

  std::vector<double> cost;
  std::vector<bool> free;
  std::vector<Row> rows;

  std::size_t var_count() const { return cost.size(); }
  std::size_t add_var(double c, bool is_free) {
    cost.push_back(c);
    free.push_back(is_free);
    return cost.size() - 1;
  }
  void add_row(std::vector<std::pair<std::size_t, double>> terms, Sense sense, double rhs) {
    rows.push_back({std::move(terms), sense, rhs});
  }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0.0;
  std::vector<double> x;
  std::size_t pivots = 0;
};

struct SimplexOptions {
  double tolerance = 1e-9;
  std::size_t max_pivots = 200000;
  /// Rebuild the basis inverse from scratch every this many pivots.
  std::size_t refactor_every = 64;
};

/// Two-phase dense revised simplex with Bland's rule. Throws SolverError when
/// the pivot budget runs out or the basis becomes singular.
LpResult solve_lp(const LinearProgram& lp, const SimplexOptions& options = {});

/// Optimum of an oracle system with every u-variable at its tightest value.
struct SmallLpResult {
  double value = 0.0;
  /// One value per u-variable (seeds included).
  std::vector<double> values;
  /// Indices into system.constraints with slack <= 1e-9 at `values`.
  std::vector<std::size_t> tight;
  std::size_t pivots = 0;
};

/// Solves the oracle LP with the simplex core. Seed equalities are substituted
/// out first; the optimum is then polished so each eliminated variable equals
/// the largest right-hand side of its constraints, which leaves every variable
/// tight on at least one constraint. Throws SolverError if the polished and
/// simplex objectives disagree.
SmallLpResult solve_small_lp(const ConstraintSystem& system, const SimplexOptions& options = {});

/// Same optimum computed by evaluating the constraints forward in elimination
/// order (each eliminated variable is the max of its right-hand sides).
/// `values` is resized to system.var_count and overwritten. Returns the objective.
double propagate_small_lp(const ConstraintSystem& system, std::vector<double>& values);
SmallLpResult propagate_small_lp(const ConstraintSystem& system);

/// Indices of constraints with slack <= tol * (1 + |lhs|) at `values`.
std::vector<std::size_t> tight_constraints(const ConstraintSystem& system, std::span<const double> values,
                                           double tol = 1e-9);

}  // namespace fsmdp
