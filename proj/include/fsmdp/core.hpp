#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

#include "fsmdp/errors.hpp"

namespace fsmdp {

/// A full joint state: one value per state variable.
using State = std::vector<int>;
/// A probability vector over the assignments of some scope, in canonical order.
using Distribution = std::vector<double>;

/// The variable universe S_1 x ... x S_m together with the action set.
class FactoredSpace {
 public:
  FactoredSpace() = default;
  FactoredSpace(std::vector<int> cards, int action_count);

  std::size_t var_count() const { return cards_.size(); }
  int card(std::size_t var) const { return cards_[var]; }
  const std::vector<int>& cards() const { return cards_; }
  int action_count() const { return action_count_; }

  /// Number of joint states, or nullopt if it does not fit in 63 bits.
  std::optional<std::uint64_t> joint_size() const;
  /// Number of joint states; throws ScaleError when it exceeds `limit`.
  std::uint64_t checked_joint_size(std::uint64_t limit) const;

  bool valid_state(std::span<const int> state) const;

  bool operator==(const FactoredSpace&) const = default;

 private:
  std::vector<int> cards_;
  int action_count_ = 1;
};

/// A strictly increasing set of variable indices.
class Scope {
 public:
  Scope() = default;
  /// Throws ConfigError unless `indices` is strictly increasing and nonnegative.
  explicit Scope(std::vector<int> indices);
  Scope(std::initializer_list<int> indices) : Scope(std::vector<int>(indices)) {}

  /// Builds a scope from arbitrary (unsorted, possibly repeated) indices.
  static Scope from_unsorted(std::vector<int> indices);
  static Scope full(std::size_t var_count);

  std::size_t size() const { return idx_.size(); }
  bool empty() const { return idx_.empty(); }
  int operator[](std::size_t k) const { return idx_[k]; }
  auto begin() const { return idx_.begin(); }
  auto end() const { return idx_.end(); }
  const std::vector<int>& indices() const { return idx_; }

  bool contains(int var) const;
  /// Position of `var` inside the scope, or -1.
  int position(int var) const;
  bool subset_of(const Scope& other) const;
  Scope union_with(const Scope& other) const;
  Scope without(int var) const;

  /// Throws ConfigError if any index is out of range for `space`.
  void validate(const FactoredSpace& space) const;

  bool operator==(const Scope&) const = default;
  auto operator<=>(const Scope&) const = default;

 private:
  std::vector<int> idx_;
};

/// Values for the variables of one scope.
struct Assignment {
  Scope scope;
  std::vector<int> values;

  bool operator==(const Assignment&) const = default;
};

/// |Val(Z)|; throws ScaleError on overflow.
std::uint64_t value_count(const Scope& scope, const FactoredSpace& space);

/// Mixed-radix rank, lowest scope index varying fastest.
std::uint64_t rank(const Scope& scope, std::span<const int> values, const FactoredSpace& space);
std::vector<int> unrank(const Scope& scope, std::uint64_t r, const FactoredSpace& space);

/// All assignments of `scope` in rank order.
std::vector<Assignment> enumerate_assignments(const Scope& scope, const FactoredSpace& space);

/// x[Z] for a full state.
Assignment project(std::span<const int> state, const Scope& scope);

/// g(Z): number of joint states sharing one assignment of Z.
std::uint64_t counting_factor(const FactoredSpace& space, const Scope& scope);

/// Precomputed strides for ranking the restriction of a full state (or of a
/// larger scope's assignment) onto a scope without building an Assignment.
class ScopeIndexer {
 public:
  ScopeIndexer() = default;
  ScopeIndexer(const Scope& scope, const FactoredSpace& space);

  std::size_t rank_of_state(std::span<const int> state) const {
    std::size_t r = 0;
    for (std::size_t k = 0; k < vars_.size(); ++k) r += static_cast<std::size_t>(state[vars_[k]]) * strides_[k];
    return r;
  }
  std::size_t size() const { return size_; }
  const Scope& scope() const { return scope_; }

 private:
  Scope scope_;
  std::vector<int> vars_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 1;
};

/// Iterates every joint state in rank order (scope = all variables).
class StateCursor {
 public:
  explicit StateCursor(const FactoredSpace& space) : cards_(space.cards()), state_(space.var_count(), 0) {}
  const State& state() const { return state_; }
  /// Advances; returns false after the last state.
  bool next();

 private:
  std::vector<int> cards_;
  State state_;
};

/// h_j: a table over Val(Z_j^h) plus the parent scope its transition marginal conditions on.
struct BasisFunction {
  Scope value_scope;
  Scope parent_scope;
  std::vector<double> table;

  bool operator==(const BasisFunction&) const = default;
};

/// The basis h_0..h_{phi-1}; h_0 is always the constant function.
class Basis {
 public:
  Basis() : Basis(FactoredSpace({2}, 1), {}, 1.0) {}
  /// `functions` excludes h_0, which is prepended. Validates tables against `space`
  /// and the declared bound `G`.
  Basis(const FactoredSpace& space, std::vector<BasisFunction> functions, double G);

  std::size_t size() const { return fns_.size(); }
  const BasisFunction& operator[](std::size_t j) const { return fns_[j]; }
  auto begin() const { return fns_.begin(); }
  auto end() const { return fns_.end(); }
  double bound() const { return G_; }

  /// h_j at a full state.
  double eval(std::size_t j, std::span<const int> state) const {
    return fns_[j].table[value_idx_[j].rank_of_state(state)];
  }
  const ScopeIndexer& value_indexer(std::size_t j) const { return value_idx_[j]; }
  const ScopeIndexer& parent_indexer(std::size_t j) const { return parent_idx_[j]; }

 private:
  std::vector<BasisFunction> fns_;
  std::vector<ScopeIndexer> value_idx_;
  std::vector<ScopeIndexer> parent_idx_;
  double G_ = 1.0;
};

/// Linear value weights w^{(l)}_j for steps l = 1..tau; step tau+1 is identically zero.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  WeightMatrix(int tau, std::size_t phi, double W) : tau_(tau), phi_(phi), W_(W), w_(tau * phi, 0.0) {}
  WeightMatrix(int tau, std::size_t phi, double W, std::vector<double> flat);

  int tau() const { return tau_; }
  std::size_t phi() const { return phi_; }
  double bound() const { return W_; }
  std::size_t dimension() const { return w_.size(); }

  /// w^{(step)}_j with 1-based step; 0 for step tau+1.
  double at(int step, std::size_t j) const { return step > tau_ ? 0.0 : w_[(step - 1) * phi_ + j]; }
  void set(int step, std::size_t j, double v) { w_[(step - 1) * phi_ + j] = v; }
  /// Coordinate of (step, j) in the flat vector.
  std::size_t coord(int step, std::size_t j) const { return (step - 1) * phi_ + j; }

  std::span<const double> flat() const { return w_; }
  std::span<double> flat() { return w_; }
  double l1_norm(int step) const;

 private:
  int tau_ = 0;
  std::size_t phi_ = 0;
  double W_ = 0.0;
  std::vector<double> w_;
};

/// sum_j w^{(step)}_j h_j(state[Z_j^h]); zero at step tau+1.
double eval_value(const WeightMatrix& w, const Basis& basis, int step, std::span<const int> state);

}  // namespace fsmdp
