#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fsmdp/core.hpp"
#include "fsmdp/estimation.hpp"
#include "fsmdp/model.hpp"

namespace fsmdp {

/// Which way a basis weight points; zero counts as nonnegative.
enum class Sign { NonNegative = 0, Negative = 1 };

inline Sign sign_of(double w) { return w < 0.0 ? Sign::Negative : Sign::NonNegative; }

/// Maximizes sign * sum_o h[o] P[o] over the L1 ball of radius 2 * half_width
/// around `empirical`, intersected with the simplex, by the greedy
/// boost-the-best / drain-the-worst rule. Outcomes are ordered by h
/// (descending for NonNegative, ascending for Negative) with ties broken by
/// lower rank first. An unvisited cell (nullopt) gets the point mass on the
/// first outcome of that order.
Distribution optimistic_marginal(std::span<const double> h, const std::optional<Distribution>& empirical,
                                 double half_width, Sign sign);

struct TableOptions {
  /// Upper bound C on reward means; optimistic rewards are clipped to it.
  double C = 1.0;
  bool clip_reward = true;
  /// Multiplies every width d; 1 is the schedule itself.
  double width_scale = 1.0;
};

/// Empirical mean plus sqrt(d / n), clipped to C; C when unvisited.
double optimistic_reward(const ConfidenceState& conf, std::size_t i, std::size_t z, int a,
                         const TableOptions& options = {});

/// Precomputed optimistic rewards and both sign variants of every optimistic
/// marginal, plus the expectations sum_o h_j(o) P(o) the planner reads.
class OptimisticTables {
 public:
  static OptimisticTables build(const ConfidenceState& conf, const TableOptions& options = {});
  /// Zero-width tables: rewards and marginals taken verbatim from `model`.
  static OptimisticTables from_model(const FsmdpModel& model);

  const ModelStructure& structure() const { return *structure_; }
  std::shared_ptr<const ModelStructure> structure_ptr() const { return structure_; }

  double reward(std::size_t i, std::size_t z, int a) const {
    return reward_[i][static_cast<std::size_t>(a) * structure_->reward_values(i) + z];
  }
  std::span<const double> marginal(std::size_t j, std::size_t z, int a, Sign s) const {
    const std::size_t K = structure_->outcome_count(j);
    return std::span<const double>(marg_[j]).subspan(slot(j, z, a, s) * K, K);
  }
  /// sum_o h_j(o) P_j^{s}(o | z, a); 1 for h_0.
  double expectation(std::size_t j, std::size_t z, int a, Sign s) const {
    return j == 0 ? 1.0 : expect_[j][slot(j, z, a, s)];
  }

  std::size_t reward_entry_count() const;
  std::size_t marginal_distribution_count() const;

  bool operator==(const OptimisticTables& o) const {
    return reward_ == o.reward_ && marg_ == o.marg_ && expect_ == o.expect_;
  }

 private:
  std::size_t slot(std::size_t j, std::size_t z, int a, Sign s) const {
    return (static_cast<std::size_t>(a) * structure_->parent_count(j) + z) * 2 + static_cast<std::size_t>(s);
  }
  void fill_expectations();

  std::shared_ptr<const ModelStructure> structure_;
  std::vector<std::vector<double>> reward_;
  std::vector<std::vector<double>> marg_;
  std::vector<std::vector<double>> expect_;
};

}  // namespace fsmdp
