#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

// Paired runs of the optimized components against the brute-force references.

namespace fsmdp {

struct CheckResult {
  std::string name;
  bool pass = false;
  /// Largest discrepancy observed (check-specific units).
  double worst = 0.0;
  std::string detail;
  double seconds = 0.0;
};

/// Elimination minimum and extracted state vs brute-force bracket maxima.
CheckResult check_elimination(int instances, std::uint64_t seed, int max_vars = 10, double tol = 1e-9);
/// Dense simplex on the small LPs vs exact propagation.
CheckResult check_simplex(int instances, std::uint64_t seed, double tol = 1e-7);
/// Greedy optimistic marginal vs vertex enumeration.
CheckResult check_optimistic_marginal(int instances, std::uint64_t seed, double tol = 1e-12);
/// Zero-width tabular planning: ellipsoid planner vs exponential LP vs value iteration.
CheckResult check_zero_width_planner(std::uint64_t seed, int bits = 3, double W = 20.0, double epsilon = 1e-3);
/// Feasible verdicts confirmed exhaustively; cuts separate the query from sampled feasible points.
CheckResult check_oracle_soundness(int instances, int samples, std::uint64_t seed, double tol = 1e-7);
/// Closed-form objective vs summation over the state space.
CheckResult check_objective(int instances, std::uint64_t seed, double tol = 1e-9);

void print_check(std::ostream& out, const CheckResult& r);

/// Every check at a reduced size. Prints one line per check.
std::vector<CheckResult> run_oracle_suite(std::uint64_t seed, std::ostream& out);

}  // namespace fsmdp
