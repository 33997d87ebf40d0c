#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <json.hpp>

#include "fsmdp/core.hpp"
#include "fsmdp/model.hpp"

namespace fsmdp {

/// d^{R_i} = 4 sigma^2 log(4 l |X[Z_i^R]| k / delta).
double reward_width(double sigma, std::size_t reward_count, std::size_t x_size, std::uint64_t episode, double delta);

/// d^{P_j} = 2 |Val(Z_j^h)| log 2 - 2 log(delta / (2 N |Val(Pa(Z_j^h))| k^2)).
double marginal_width(std::size_t outcome_count, std::size_t marginal_count, std::size_t parent_count,
                      std::uint64_t episode, double delta);

/// Visit counts and empirical sums behind the reward and transition
/// confidence sets. Single writer (the learner loop); the episode index is
/// advanced only at episode boundaries so widths stay frozen within an episode.
class ConfidenceState {
 public:
  ConfidenceState(std::shared_ptr<const ModelStructure> structure, double delta, double sigma);

  const ModelStructure& structure() const { return *structure_; }
  std::shared_ptr<const ModelStructure> structure_ptr() const { return structure_; }
  double delta() const { return delta_; }
  double sigma() const { return sigma_; }

  std::uint64_t episode() const { return episode_; }
  void begin_episode(std::uint64_t k);
  std::uint64_t transitions() const { return transitions_; }

  /// Adds one (s, a, r_1..r_l, s') observation to every touched count.
  void record_step(std::span<const int> state, int action, std::span<const double> rewards,
                   std::span<const int> next_state);

  std::uint64_t reward_count(std::size_t i, std::size_t z, int a) const { return reward_n_[i][cell_r(i, z, a)]; }
  double reward_sum(std::size_t i, std::size_t z, int a) const { return reward_sum_[i][cell_r(i, z, a)]; }
  /// Empirical mean, or nullopt if unvisited.
  std::optional<double> empirical_reward(std::size_t i, std::size_t z, int a) const;

  std::uint64_t marginal_visits(std::size_t j, std::size_t z, int a) const { return marg_n_[j][cell_p(j, z, a)]; }
  std::uint64_t outcome_count(std::size_t j, std::size_t z, int a, std::size_t outcome) const {
    return marg_out_[j][cell_p(j, z, a) * structure_->outcome_count(j) + outcome];
  }
  /// Empirical P_j(. | z, a); nullopt is the `unvisited` sentinel.
  std::optional<Distribution> empirical_marginal(std::size_t j, std::size_t z, int a) const;

  /// Widths at the current episode index.
  double reward_width(std::size_t i) const;
  double marginal_width(std::size_t j) const;

  /// True iff every visited reward mean and transition marginal of `model`
  /// lies inside its confidence set. Throws ConfigError on a structure mismatch.
  bool contains_model(const FsmdpModel& model) const;

  /// The empirical estimates as a model; unvisited cells hold 0 / uniform.
  FsmdpModel empirical_model() const;

  nlohmann::json to_json() const;
  static ConfidenceState from_json(std::shared_ptr<const ModelStructure> structure, const nlohmann::json& j);

 private:
  std::size_t cell_r(std::size_t i, std::size_t z, int a) const {
    return static_cast<std::size_t>(a) * structure_->reward_values(i) + z;
  }
  std::size_t cell_p(std::size_t j, std::size_t z, int a) const {
    return static_cast<std::size_t>(a) * structure_->parent_count(j) + z;
  }

  std::shared_ptr<const ModelStructure> structure_;
  double delta_;
  double sigma_;
  std::uint64_t episode_ = 1;
  std::uint64_t transitions_ = 0;
  std::vector<std::vector<std::uint64_t>> reward_n_;
  std::vector<std::vector<double>> reward_sum_;
  std::vector<std::vector<std::uint64_t>> marg_n_;
  std::vector<std::vector<std::uint64_t>> marg_out_;
};

}  // namespace fsmdp
