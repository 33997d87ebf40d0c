#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fsmdp/core.hpp"
#include "fsmdp/elimination.hpp"
#include "fsmdp/environment.hpp"
#include "fsmdp/estimation.hpp"
#include "fsmdp/optimism.hpp"
#include "fsmdp/simplex.hpp"

namespace fsmdp {

/// sum_s sum_j w^{(1)}_j h_j(s), computed as sum_j w^{(1)}_j g(Z_j^h) sum_z h_j(z).
double evaluate_objective(const WeightMatrix& w, const FactoredSpace& space, const Basis& basis);

/// Coefficients c with c.flat(w) = evaluate_objective(w). With `rho` set, the
/// states are weighted by the initial distribution instead (experimental).
std::vector<double> objective_coefficients(const ModelStructure& structure,
                                           const InitialDistribution* rho = nullptr);

/// hp(w) = coef.w + offset. Feasible weights satisfy hp(w) <= 0.
struct Hyperplane {
  std::vector<double> coef;
  double offset = 0.0;

  double eval(std::span<const double> w) const;
};

/// The bracket sum_i Rbar_i + sum_j (-w^{(step)}_j h_j(s) + w^{(step+1)}_j E_j(s, a))
/// at one state, with the marginal sign picked from w^{(step+1)}.
double bracket_value(const WeightMatrix& w, const OptimisticTables& tables, std::span<const int> state, int action,
                     int step);

/// The bracket at `state` with (Rbar, P) frozen as a linear function of w.
Hyperplane bracket_hyperplane(const WeightMatrix& w, const OptimisticTables& tables, std::span<const int> state,
                              int action, int step);

/// Reads s* off the tight constraints by walking the elimination in reverse.
/// Variables absent from every scope are set to 0. Throws InvariantError if
/// some step has no tight constraint consistent with the values already fixed.
State extract_violating_state(const ConstraintSystem& system, std::span<const double> values,
                              const FactoredSpace& space, double tol = 1e-9);

enum class OracleSolver { Simplex, Propagation };

struct Violation {
  State state;
  int action = 0;
  int step = 1;
  double value = 0.0;
};

struct OracleVerdict {
  bool feasible = true;
  Hyperplane cut;
  /// True when the cut came from the L1 bound rather than an LP.
  bool norm_cut = false;
  std::optional<Violation> violation;
};

/// Strong separation oracle for the optimistic planning LP.
class SeparationOracle {
 public:
  SeparationOracle(const OptimisticTables& tables, const EliminationTemplate& elimination, double W,
                   double margin = 1e-12, OracleSolver solver = OracleSolver::Propagation);

  OracleVerdict operator()(const WeightMatrix& w);
  /// Largest bracket maximum over (action, step), without building a cut.
  double max_violation(const WeightMatrix& w);

  std::size_t calls() const { return calls_; }
  std::size_t lp_solves() const { return lp_solves_; }

 private:
  double solve_current();
  double margin_for_current() const;

  const OptimisticTables& tables_;
  const EliminationTemplate& elim_;
  double W_;
  double margin_;
  OracleSolver solver_;
  ConstraintSystem work_;
  std::vector<double> values_;
  std::size_t calls_ = 0;
  std::size_t lp_solves_ = 0;
};

enum class CuttingPlaneStatus { Certified, BudgetExhausted, VolumeUnderflow, Infeasible };

const char* to_string(CuttingPlaneStatus s);

struct EllipsoidState {
  Eigen::VectorXd center;
  Eigen::MatrixXd shape;
  std::size_t iterations = 0;
  std::optional<Eigen::VectorXd> best;
  double best_value = 0.0;
  double log_det = 0.0;
};

struct CuttingPlaneOptions {
  double epsilon = 1e-3;
  double radius = 1.0;
  /// 0 means the budget 2n(n+1) ln(3 R Phi / epsilon).
  std::size_t max_iterations = 0;
  /// Stop once best - min_{E} c.y <= epsilon, which certifies epsilon-optimality.
  bool early_stop = true;
};

struct CuttingPlaneResult {
  CuttingPlaneStatus status = CuttingPlaneStatus::Infeasible;
  std::vector<double> x;
  double value = 0.0;
  std::size_t iterations = 0;
  std::size_t budget = 0;
  std::size_t feasibility_cuts = 0;
  std::size_t objective_cuts = 0;
  /// log det of the shape matrix after each update.
  std::vector<double> log_det;
};

/// Returns nullopt when the query is feasible, else a cut with hp(query) > 0.
using CutOracle = std::function<std::optional<Hyperplane>(std::span<const double>)>;

std::size_t ellipsoid_budget(std::size_t n, double radius, double phi, double epsilon);

/// Sliding-objective ellipsoid method minimizing c.x over the oracle's set.
CuttingPlaneResult cutting_plane_solve(std::span<const double> c, const CutOracle& oracle,
                                       const CuttingPlaneOptions& options, bool record_log_det = false);

struct PlannerOptions {
  double W = 1.0;
  TableOptions tables;
  /// Explicit elimination order; min-degree when unset.
  std::optional<std::vector<int>> order;
  std::size_t max_width = 16;
  OracleSolver solver = OracleSolver::Propagation;
  double margin = 1e-12;
  bool early_stop = true;
  std::size_t max_iterations = 0;
  /// Experimental: weight the objective by this initial distribution.
  std::optional<InitialDistribution> rho_weighting;
  /// JSON-lines trace of every oracle call, if set.
  std::ostream* trace = nullptr;
};

struct PlanResult {
  WeightMatrix w;
  OptimisticTables tables;
  CuttingPlaneResult solve;
  double objective = 0.0;
  std::size_t oracle_calls = 0;
};

/// The optimistic planner: build tables once, then solve the planning LP with
/// the ellipsoid method driven by the separation oracle.
class Planner {
 public:
  Planner(std::shared_ptr<const ModelStructure> structure, PlannerOptions options);

  PlanResult plan(const ConfidenceState& confidence, double epsilon) const;
  PlanResult plan_with_tables(OptimisticTables tables, double epsilon) const;

  const EliminationTemplate& elimination() const { return elim_; }
  const std::vector<double>& objective() const { return c_; }
  const PlannerOptions& options() const { return opt_; }

 private:
  std::shared_ptr<const ModelStructure> structure_;
  PlannerOptions opt_;
  EliminationTemplate elim_;
  std::vector<double> c_;
};

/// Elimination order from an explicit list or the min-degree heuristic.
EliminationOrder choose_order(const ModelStructure& structure, const std::optional<std::vector<int>>& order,
                              std::size_t max_width = 16);

}  // namespace fsmdp
