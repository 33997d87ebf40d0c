#include "fsmdp/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace fsmdp {

namespace {

constexpr double kRowTolerance = 1e-12;

void check_row(std::span<const double> row, const std::string& what) {
  double s = 0.0;
  for (double p : row) {
    if (!(p >= 0.0) || p > 1.0 + kRowTolerance) throw ConfigError(what + ": probability outside [0, 1]");
    s += p;
  }
  if (std::abs(s - 1.0) > kRowTolerance) throw ConfigError(what + ": row sums to " + std::to_string(s));
}

}  // namespace

Environment::Environment(FactoredSpace space, std::vector<RewardComponentSpec> rewards, JointTransitionSpec transition,
                         InitialDistribution rho, int tau)
    : space_(std::move(space)),
      rewards_(std::move(rewards)),
      transition_(std::move(transition)),
      rho_(std::move(rho)),
      tau_(tau) {
  if (tau_ < 1) throw ConfigError("environment horizon must be >= 1");
  const auto A = static_cast<std::size_t>(space_.action_count());

  for (std::size_t i = 0; i < rewards_.size(); ++i) {
    const auto& r = rewards_[i];
    const std::string what = "reward component " + std::to_string(i);
    reward_idx_.emplace_back(r.scope, space_);
    if (r.mean.size() != A * reward_idx_.back().size())
      throw ConfigError(what + ": mean table has wrong size");
    if (r.sigma < 0.0) throw ConfigError(what + ": sigma must be >= 0");
    if (r.lower > r.upper) throw ConfigError(what + ": lower bound exceeds upper bound C");
    for (double m : r.mean)
      if (!(m >= r.lower && m <= r.upper)) throw ConfigError(what + ": mean outside [lower, C]");
  }

  if (transition_.components.empty()) throw ConfigError("transition needs at least one component");
  if (transition_.weights.size() != transition_.components.size())
    throw ConfigError("mixture weights do not match component count");
  check_row(transition_.weights, "mixture weights");
  if (transition_.form == JointTransitionSpec::Form::Product && transition_.components.size() != 1)
    throw ConfigError("product transition must have exactly one component");

  const auto& reference = transition_.components.front().clusters;
  for (std::size_t c = 0; c < transition_.components.size(); ++c) {
    const auto& clusters = transition_.components[c].clusters;
    std::vector<int> owner(space_.var_count(), -1);
    std::vector<ClusterIndex> idx;
    if (clusters.size() != reference.size()) throw ConfigError("mixture components must share cluster scopes");
    for (std::size_t k = 0; k < clusters.size(); ++k) {
      const auto& cl = clusters[k];
      const std::string what = "transition component " + std::to_string(c) + " cluster " + std::to_string(k);
      if (cl.scope != reference[k].scope) throw ConfigError("mixture components must share cluster scopes");
      if (cl.scope.empty()) throw ConfigError(what + ": empty scope");
      for (int v : cl.scope) {
        if (static_cast<std::size_t>(v) >= space_.var_count()) throw ConfigError(what + ": scope index out of range");
        if (owner[v] >= 0) throw ConfigError(what + ": clusters overlap on variable " + std::to_string(v));
        owner[v] = static_cast<int>(k);
      }
      ClusterIndex ci{ScopeIndexer(cl.parents, space_), ScopeIndexer(cl.scope, space_)};
      const std::size_t cells = A * ci.parents.size();
      if (cl.deterministic()) {
        if (cl.successor.size() != cells || !cl.table.empty()) throw ConfigError(what + ": successor table has wrong size");
        for (auto s : cl.successor)
          if (s >= ci.outcomes.size()) throw ConfigError(what + ": successor out of range");
      } else {
        if (cl.table.size() != cells * ci.outcomes.size()) throw ConfigError(what + ": table has wrong size");
        for (std::size_t cell = 0; cell < cells; ++cell)
          check_row(std::span<const double>(cl.table).subspan(cell * ci.outcomes.size(), ci.outcomes.size()), what);
      }
      idx.push_back(std::move(ci));
    }
    for (std::size_t v = 0; v < owner.size(); ++v)
      if (owner[v] < 0) throw ConfigError("state variable " + std::to_string(v) + " is not covered by any cluster");
    cluster_idx_.push_back(std::move(idx));
  }

  switch (rho_.kind) {
    case InitialDistribution::Kind::Uniform:
      break;
    case InitialDistribution::Kind::Point:
      if (!space_.valid_state(rho_.point)) throw ConfigError("initial point state is invalid");
      break;
    case InitialDistribution::Kind::Product:
      if (rho_.probs.size() != space_.var_count()) throw ConfigError("product initial distribution needs one row per variable");
      for (std::size_t v = 0; v < rho_.probs.size(); ++v) {
        if (rho_.probs[v].size() != static_cast<std::size_t>(space_.card(v)))
          throw ConfigError("initial distribution row " + std::to_string(v) + " has wrong length");
        check_row(rho_.probs[v], "initial distribution row " + std::to_string(v));
      }
      break;
  }
}

std::vector<Scope> Environment::reward_scopes() const {
  std::vector<Scope> out;
  for (const auto& r : rewards_) out.push_back(r.scope);
  return out;
}

std::vector<Scope> Environment::cluster_scopes() const {
  std::vector<Scope> out;
  for (const auto& c : transition_.components.front().clusters) out.push_back(c.scope);
  return out;
}

State Environment::reset(Rng& rng) const {
  State s(space_.var_count(), 0);
  switch (rho_.kind) {
    case InitialDistribution::Kind::Point:
      return rho_.point;
    case InitialDistribution::Kind::Uniform:
      for (std::size_t v = 0; v < s.size(); ++v)
        s[v] = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(space_.card(v))));
      return s;
    case InitialDistribution::Kind::Product:
      for (std::size_t v = 0; v < s.size(); ++v) s[v] = static_cast<int>(sample_categorical(rng, rho_.probs[v]));
      return s;
  }
  return s;
}

State Environment::reset(std::uint64_t seed) const {
  Rng rng(seed);
  return reset(rng);
}

StepResult Environment::step(const State& state, int action, Rng& rng) const {
  StepResult out;
  out.next_state.assign(space_.var_count(), 0);
  const std::size_t c = transition_.components.size() == 1 ? 0 : sample_categorical(rng, transition_.weights);
  const auto& clusters = transition_.components[c].clusters;
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    const auto& cl = clusters[k];
    const auto& ci = cluster_idx_[c][k];
    const std::size_t cell = static_cast<std::size_t>(action) * ci.parents.size() + ci.parents.rank_of_state(state);
    std::size_t outcome;
    if (cl.deterministic()) {
      outcome = cl.successor[cell];
    } else {
      const std::size_t K = ci.outcomes.size();
      outcome = sample_categorical(rng, std::span<const double>(cl.table).subspan(cell * K, K));
    }
    for (int v : cl.scope) {
      const int card = space_.card(v);
      out.next_state[v] = static_cast<int>(outcome % static_cast<std::size_t>(card));
      outcome /= static_cast<std::size_t>(card);
    }
  }
  out.rewards.reserve(rewards_.size());
  for (std::size_t i = 0; i < rewards_.size(); ++i) {
    const auto& r = rewards_[i];
    const double mean = r.mean[static_cast<std::size_t>(action) * reward_idx_[i].size() + reward_idx_[i].rank_of_state(state)];
    double noise = 0.0;
    if (r.sigma > 0.0) {
      double z;
      do {
        z = standard_normal(rng);
      } while (std::abs(z) > 4.0);
      noise = r.sigma * z;
    }
    out.rewards.push_back(mean + noise);
  }
  return out;
}

double Environment::cluster_prob(std::size_t c, std::size_t k, std::span<const int> state, int action,
                                 std::span<const int> next) const {
  const auto& cl = transition_.components[c].clusters[k];
  const auto& ci = cluster_idx_[c][k];
  const std::size_t cell = static_cast<std::size_t>(action) * ci.parents.size() + ci.parents.rank_of_state(state);
  const std::size_t outcome = ci.outcomes.rank_of_state(next);
  if (cl.deterministic()) return cl.successor[cell] == outcome ? 1.0 : 0.0;
  return cl.table[cell * ci.outcomes.size() + outcome];
}

Distribution Environment::marginalize(const Scope& value_scope, const Scope& parent_scope,
                                      std::span<const int> parent_values, int action) const {
  if (parent_values.size() != parent_scope.size()) throw ConfigError("parent assignment does not match parent scope");
  State parent_state(space_.var_count(), 0);
  for (std::size_t k = 0; k < parent_scope.size(); ++k) parent_state[parent_scope[k]] = parent_values[k];

  const ScopeIndexer out_idx(value_scope, space_);
  Distribution result(out_idx.size(), 0.0);
  const auto outcomes = enumerate_assignments(value_scope, space_);

  for (std::size_t c = 0; c < transition_.components.size(); ++c) {
    const auto& clusters = transition_.components[c].clusters;
    std::vector<std::size_t> used;
    std::vector<int> covered;
    for (std::size_t k = 0; k < clusters.size(); ++k) {
      const auto& cl = clusters[k];
      bool any = false;
      bool all = true;
      for (int v : cl.scope) {
        if (value_scope.contains(v))
          any = true;
        else
          all = false;
      }
      if (!any) continue;
      if (!all)
        throw ConfigError("scope not covered by cluster structure: a cluster straddles the marginal's scope");
      if (!cl.parents.subset_of(parent_scope))
        throw ConfigError("scope not covered by cluster structure: cluster parents lie outside the parent scope");
      used.push_back(k);
      covered.insert(covered.end(), cl.scope.begin(), cl.scope.end());
    }
    if (Scope::from_unsorted(covered) != value_scope)
      throw ConfigError("scope not covered by cluster structure: value scope is not a union of clusters");

    State next(space_.var_count(), 0);
    for (std::size_t r = 0; r < outcomes.size(); ++r) {
      for (std::size_t k = 0; k < value_scope.size(); ++k) next[value_scope[k]] = outcomes[r].values[k];
      double p = transition_.weights[c];
      for (auto k : used) p *= cluster_prob(c, k, parent_state, action, next);
      result[r] += p;
    }
  }
  return result;
}

double Environment::expected_reward(std::span<const int> state, int action) const {
  double s = 0.0;
  for (std::size_t i = 0; i < rewards_.size(); ++i)
    s += rewards_[i].mean[static_cast<std::size_t>(action) * reward_idx_[i].size() + reward_idx_[i].rank_of_state(state)];
  return s;
}

std::vector<double> Environment::transition_row(std::span<const int> state, int action) const {
  const auto n = space_.checked_joint_size(std::uint64_t{1} << 20);
  std::vector<double> row(n, 0.0);
  for (std::size_t c = 0; c < transition_.components.size(); ++c) {
    StateCursor cur(space_);
    std::size_t r = 0;
    do {
      double p = transition_.weights[c];
      for (std::size_t k = 0; k < transition_.components[c].clusters.size() && p > 0.0; ++k)
        p *= cluster_prob(c, k, state, action, cur.state());
      row[r++] += p;
    } while (cur.next());
  }
  return row;
}

double Environment::initial_probability(std::span<const int> state) const {
  switch (rho_.kind) {
    case InitialDistribution::Kind::Point:
      return std::equal(state.begin(), state.end(), rho_.point.begin(), rho_.point.end()) ? 1.0 : 0.0;
    case InitialDistribution::Kind::Uniform: {
      double p = 1.0;
      for (int c : space_.cards()) p /= c;
      return p;
    }
    case InitialDistribution::Kind::Product: {
      double p = 1.0;
      for (std::size_t v = 0; v < state.size(); ++v) p *= rho_.probs[v][state[v]];
      return p;
    }
  }
  return 0.0;
}

FsmdpModel Environment::to_model(std::shared_ptr<const ModelStructure> structure) const {
  const auto& st = *structure;
  if (st.space != space_) throw ConfigError("model structure and environment disagree on the factored space");
  if (st.reward_scopes != reward_scopes())
    throw ConfigError("model structure and environment disagree on reward scopes");
  FsmdpModel m;
  m.structure = structure;
  for (const auto& r : rewards_) m.reward_means.push_back(r.mean);
  m.marginals.resize(st.basis.size());
  for (std::size_t j = 1; j < st.basis.size(); ++j) {
    const auto& f = st.basis[j];
    auto& table = m.marginals[j];
    table.reserve(space_.action_count() * st.parent_count(j) * st.outcome_count(j));
    const auto parents = enumerate_assignments(f.parent_scope, space_);
    for (int a = 0; a < space_.action_count(); ++a)
      for (const auto& z : parents) {
        auto d = marginalize(f.value_scope, f.parent_scope, z.values, a);
        table.insert(table.end(), d.begin(), d.end());
      }
  }
  return m;
}

GeneratedEnvironment make_two_state_env(const TwoStateParams& p) {
  FactoredSpace space({2}, 2);
  RewardComponentSpec reward{Scope{0}, {-1.0, 0.0, 0.0, 0.0}, p.sigma, -1.0, 0.0};
  Cluster cl;
  cl.scope = Scope{0};
  cl.parents = Scope{0};
  // [a][x][x']
  cl.table = {1.0 - p.risky_escape, p.risky_escape, p.relapse, 1.0 - p.relapse,
              1.0 - p.safe_escape,  p.safe_escape,  p.relapse, 1.0 - p.relapse};
  Environment env(space, {reward}, JointTransitionSpec::product({{cl}}), {}, p.tau);
  BasisFunction indicator{Scope{0}, Scope{0}, {0.0, 1.0}};
  return {std::move(env), {indicator}, 1.0};
}

GeneratedEnvironment make_safe_action_family(int m, std::uint64_t seed) {
  if (m < 1 || m > 20) throw ConfigError("safe-action family supports 1 <= m <= 20");
  Rng rng(seed);
  FactoredSpace space(std::vector<int>(m, 2), 2);
  const std::uint32_t n = std::uint32_t{1} << m;
  const auto opt = static_cast<std::uint32_t>(uniform_index(rng, n));

  Cluster cl;
  cl.scope = Scope::full(m);
  cl.parents = Scope::full(m);
  cl.successor.resize(2 * static_cast<std::size_t>(n));
  RewardComponentSpec reward{Scope::full(m), std::vector<double>(2 * static_cast<std::size_t>(n), 0.0), 0.0, -1.0, 0.0};
  for (std::uint32_t i = 0; i < n; ++i) {
    cl.successor[i] = opt;
    auto j = static_cast<std::uint32_t>(uniform_index(rng, n - 1));
    if (j >= opt) ++j;
    cl.successor[n + i] = j;
    reward.mean[n + i] = uniform_index(rng, 2) == 0 ? -1.0 : -0.5;
  }
  Environment env(space, {reward}, JointTransitionSpec::product({{cl}}), {}, 1);

  std::vector<double> table(n);
  for (auto& v : table) v = 2.0 * uniform01(rng) - 1.0;
  BasisFunction h{Scope::full(m), Scope::full(m), std::move(table)};
  return {std::move(env), {h}, 1.0};
}

}  // namespace fsmdp
