#include "fsmdp/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fsmdp {

namespace {

constexpr std::uint64_t kRankLimit = std::uint64_t{1} << 62;

bool mul_overflows(std::uint64_t a, std::uint64_t b) {
  return b != 0 && a > kRankLimit / b;
}

}  // namespace

FactoredSpace::FactoredSpace(std::vector<int> cards, int action_count)
    : cards_(std::move(cards)), action_count_(action_count) {
  if (cards_.empty()) throw ConfigError("factored space needs at least one state variable");
  for (std::size_t i = 0; i < cards_.size(); ++i)
    if (cards_[i] < 2)
      throw ConfigError("state variable " + std::to_string(i) + " has cardinality " + std::to_string(cards_[i]) +
                        " (must be >= 2)");
  if (action_count_ < 1) throw ConfigError("action count must be >= 1");
}

std::optional<std::uint64_t> FactoredSpace::joint_size() const {
  std::uint64_t n = 1;
  for (int c : cards_) {
    if (mul_overflows(n, static_cast<std::uint64_t>(c))) return std::nullopt;
    n *= static_cast<std::uint64_t>(c);
  }
  return n;
}

std::uint64_t FactoredSpace::checked_joint_size(std::uint64_t limit) const {
  auto n = joint_size();
  if (!n || *n > limit)
    throw ScaleError("brute-force scale exceeded: joint state space larger than " + std::to_string(limit));
  return *n;
}

bool FactoredSpace::valid_state(std::span<const int> state) const {
  if (state.size() != cards_.size()) return false;
  for (std::size_t i = 0; i < state.size(); ++i)
    if (state[i] < 0 || state[i] >= cards_[i]) return false;
  return true;
}

Scope::Scope(std::vector<int> indices) : idx_(std::move(indices)) {
  for (std::size_t k = 0; k < idx_.size(); ++k) {
    if (idx_[k] < 0) throw ConfigError("scope index must be nonnegative");
    if (k > 0 && idx_[k] <= idx_[k - 1]) throw ConfigError("scope indices must be strictly increasing");
  }
}

Scope Scope::from_unsorted(std::vector<int> indices) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  return Scope(std::move(indices));
}

Scope Scope::full(std::size_t var_count) {
  std::vector<int> v(var_count);
  for (std::size_t i = 0; i < var_count; ++i) v[i] = static_cast<int>(i);
  return Scope(std::move(v));
}

bool Scope::contains(int var) const { return std::binary_search(idx_.begin(), idx_.end(), var); }

int Scope::position(int var) const {
  auto it = std::lower_bound(idx_.begin(), idx_.end(), var);
  if (it == idx_.end() || *it != var) return -1;
  return static_cast<int>(it - idx_.begin());
}

bool Scope::subset_of(const Scope& other) const {
  return std::includes(other.idx_.begin(), other.idx_.end(), idx_.begin(), idx_.end());
}

Scope Scope::union_with(const Scope& other) const {
  std::vector<int> out;
  std::set_union(idx_.begin(), idx_.end(), other.idx_.begin(), other.idx_.end(), std::back_inserter(out));
  return Scope(std::move(out));
}

Scope Scope::without(int var) const {
  std::vector<int> out;
  for (int v : idx_)
    if (v != var) out.push_back(v);
  return Scope(std::move(out));
}

void Scope::validate(const FactoredSpace& space) const {
  for (int v : idx_)
    if (static_cast<std::size_t>(v) >= space.var_count())
      throw ConfigError("scope index " + std::to_string(v) + " out of range for " +
                        std::to_string(space.var_count()) + " state variables");
}

std::uint64_t value_count(const Scope& scope, const FactoredSpace& space) {
  scope.validate(space);
  std::uint64_t n = 1;
  for (int v : scope) {
    auto c = static_cast<std::uint64_t>(space.card(v));
    if (mul_overflows(n, c)) throw ScaleError("brute-force scale exceeded: scope value count overflows");
    n *= c;
  }
  return n;
}

std::uint64_t rank(const Scope& scope, std::span<const int> values, const FactoredSpace& space) {
  if (values.size() != scope.size()) throw ConfigError("assignment length does not match scope size");
  std::uint64_t r = 0;
  std::uint64_t stride = 1;
  for (std::size_t k = 0; k < scope.size(); ++k) {
    int card = space.card(scope[k]);
    if (values[k] < 0 || values[k] >= card) throw ConfigError("assignment value out of range");
    r += static_cast<std::uint64_t>(values[k]) * stride;
    stride *= static_cast<std::uint64_t>(card);
  }
  return r;
}

std::vector<int> unrank(const Scope& scope, std::uint64_t r, const FactoredSpace& space) {
  std::vector<int> values(scope.size());
  for (std::size_t k = 0; k < scope.size(); ++k) {
    auto card = static_cast<std::uint64_t>(space.card(scope[k]));
    values[k] = static_cast<int>(r % card);
    r /= card;
  }
  if (r != 0) throw ConfigError("rank out of range for scope");
  return values;
}

std::vector<Assignment> enumerate_assignments(const Scope& scope, const FactoredSpace& space) {
  const std::uint64_t n = value_count(scope, space);
  std::vector<Assignment> out;
  out.reserve(n);
  std::vector<int> values(scope.size(), 0);
  for (std::uint64_t r = 0; r < n; ++r) {
    out.push_back({scope, values});
    for (std::size_t k = 0; k < scope.size(); ++k) {
      if (++values[k] < space.card(scope[k])) break;
      values[k] = 0;
    }
  }
  return out;
}

Assignment project(std::span<const int> state, const Scope& scope) {
  Assignment a{scope, {}};
  a.values.reserve(scope.size());
  for (int v : scope) a.values.push_back(state[v]);
  return a;
}

std::uint64_t counting_factor(const FactoredSpace& space, const Scope& scope) {
  scope.validate(space);
  std::uint64_t g = 1;
  for (std::size_t i = 0; i < space.var_count(); ++i) {
    if (scope.contains(static_cast<int>(i))) continue;
    auto c = static_cast<std::uint64_t>(space.card(i));
    if (mul_overflows(g, c)) throw ScaleError("brute-force scale exceeded: counting factor overflows");
    g *= c;
  }
  return g;
}

ScopeIndexer::ScopeIndexer(const Scope& scope, const FactoredSpace& space) : scope_(scope), vars_(scope.indices()) {
  size_ = static_cast<std::size_t>(value_count(scope, space));
  strides_.resize(vars_.size());
  std::size_t stride = 1;
  for (std::size_t k = 0; k < vars_.size(); ++k) {
    strides_[k] = stride;
    stride *= static_cast<std::size_t>(space.card(vars_[k]));
  }
}

bool StateCursor::next() {
  for (std::size_t k = 0; k < state_.size(); ++k) {
    if (++state_[k] < cards_[k]) return true;
    state_[k] = 0;
  }
  return false;
}

Basis::Basis(const FactoredSpace& space, std::vector<BasisFunction> functions, double G) : G_(G) {
  if (!(G > 0.0)) throw ConfigError("basis bound G must be positive");
  fns_.reserve(functions.size() + 1);
  fns_.push_back({Scope{}, Scope{}, {1.0}});
  for (auto& f : functions) fns_.push_back(std::move(f));
  for (std::size_t j = 0; j < fns_.size(); ++j) {
    const auto& f = fns_[j];
    f.value_scope.validate(space);
    f.parent_scope.validate(space);
    if (j > 0 && f.value_scope.empty())
      throw ConfigError("basis function " + std::to_string(j) + " has an empty value scope (only h_0 may)");
    if (f.table.size() != value_count(f.value_scope, space))
      throw ConfigError("basis function " + std::to_string(j) + " table has " + std::to_string(f.table.size()) +
                        " entries, expected |Val(Z)| = " + std::to_string(value_count(f.value_scope, space)));
    for (double v : f.table)
      if (!std::isfinite(v) || std::abs(v) > G)
        throw ConfigError("basis function " + std::to_string(j) + " entry exceeds declared bound G");
    value_idx_.emplace_back(f.value_scope, space);
    parent_idx_.emplace_back(f.parent_scope, space);
  }
}

WeightMatrix::WeightMatrix(int tau, std::size_t phi, double W, std::vector<double> flat)
    : tau_(tau), phi_(phi), W_(W), w_(std::move(flat)) {
  if (w_.size() != static_cast<std::size_t>(tau) * phi) throw ConfigError("weight vector has wrong dimension");
}

double WeightMatrix::l1_norm(int step) const {
  double s = 0.0;
  for (std::size_t j = 0; j < phi_; ++j) s += std::abs(at(step, j));
  return s;
}

double eval_value(const WeightMatrix& w, const Basis& basis, int step, std::span<const int> state) {
  if (step > w.tau()) return 0.0;
  double v = 0.0;
  for (std::size_t j = 0; j < basis.size(); ++j) v += w.at(step, j) * basis.eval(j, state);
  return v;
}

}  // namespace fsmdp
