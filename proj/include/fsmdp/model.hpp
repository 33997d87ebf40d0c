#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "fsmdp/core.hpp"

namespace fsmdp {

/// Everything the learner knows up front: the space, the horizon, the reward
/// scopes Z_i^R and the basis (value scopes plus parent scopes).
struct ModelStructure {
  FactoredSpace space;
  int tau = 1;
  std::vector<Scope> reward_scopes;
  Basis basis;

  ModelStructure() = default;
  ModelStructure(FactoredSpace space, int tau, std::vector<Scope> reward_scopes, Basis basis);

  std::size_t reward_count() const { return reward_scopes.size(); }
  /// |Val(Z_i^R)|, state part only.
  std::size_t reward_values(std::size_t i) const { return reward_idx_[i].size(); }
  const ScopeIndexer& reward_indexer(std::size_t i) const { return reward_idx_[i]; }
  std::size_t outcome_count(std::size_t j) const { return basis.value_indexer(j).size(); }
  std::size_t parent_count(std::size_t j) const { return basis.parent_indexer(j).size(); }

  /// N = |A| * sum_{j >= 1} |Val(Pa(Z_j^h))|; h_0 has no learned marginal.
  std::size_t marginal_count() const;

 private:
  std::vector<ScopeIndexer> reward_idx_;
};

/// Reward means and transition marginals over a fixed structure: the (R, P)
/// container used for ground truth and for optimistic estimates alike.
///
/// Layouts: reward_means[i][a * |Val(Z_i^R)| + z],
/// marginals[j][(a * |Val(Pa_j)| + z) * |Val(Z_j^h)| + outcome]. marginals[0] is unused.
struct FsmdpModel {
  std::shared_ptr<const ModelStructure> structure;
  std::vector<std::vector<double>> reward_means;
  std::vector<std::vector<double>> marginals;

  double reward_mean(std::size_t i, std::size_t z, int a) const {
    return reward_means[i][static_cast<std::size_t>(a) * structure->reward_values(i) + z];
  }
  std::span<const double> marginal(std::size_t j, std::size_t z, int a) const {
    const std::size_t k = structure->outcome_count(j);
    const std::size_t cell = static_cast<std::size_t>(a) * structure->parent_count(j) + z;
    return std::span<const double>(marginals[j]).subspan(cell * k, k);
  }
};

}  // namespace fsmdp
