#include "fsmdp/estimation.hpp"

#include <cmath>
#include <string>

namespace fsmdp {

namespace {

constexpr double kContainTolerance = 1e-12;

bool same_structure(const ModelStructure& a, const ModelStructure& b) {
  if (a.space != b.space || a.reward_scopes != b.reward_scopes || a.basis.size() != b.basis.size()) return false;
  for (std::size_t j = 0; j < a.basis.size(); ++j)
    if (a.basis[j].value_scope != b.basis[j].value_scope || a.basis[j].parent_scope != b.basis[j].parent_scope)
      return false;
  return true;
}

}  // namespace

double reward_width(double sigma, std::size_t reward_count, std::size_t x_size, std::uint64_t episode, double delta) {
  return 4.0 * sigma * sigma *
         std::log(4.0 * static_cast<double>(reward_count) * static_cast<double>(x_size) * static_cast<double>(episode) /
                  delta);
}

double marginal_width(std::size_t outcome_count, std::size_t marginal_count, std::size_t parent_count,
                      std::uint64_t episode, double delta) {
  const double k = static_cast<double>(episode);
  return 2.0 * static_cast<double>(outcome_count) * std::log(2.0) -
         2.0 * std::log(delta / (2.0 * static_cast<double>(marginal_count) * static_cast<double>(parent_count) * k * k));
}

ConfidenceState::ConfidenceState(std::shared_ptr<const ModelStructure> structure, double delta, double sigma)
    : structure_(std::move(structure)), delta_(delta), sigma_(sigma) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (sigma < 0.0) throw ConfigError("sigma must be >= 0");
  const auto& st = *structure_;
  const auto A = static_cast<std::size_t>(st.space.action_count());
  for (std::size_t i = 0; i < st.reward_count(); ++i) {
    reward_n_.emplace_back(A * st.reward_values(i), 0);
    reward_sum_.emplace_back(A * st.reward_values(i), 0.0);
  }
  marg_n_.resize(st.basis.size());
  marg_out_.resize(st.basis.size());
  for (std::size_t j = 1; j < st.basis.size(); ++j) {
    marg_n_[j].assign(A * st.parent_count(j), 0);
    marg_out_[j].assign(A * st.parent_count(j) * st.outcome_count(j), 0);
  }
}

void ConfidenceState::begin_episode(std::uint64_t k) {
  if (k < 1) throw ConfigError("episode index starts at 1");
  episode_ = k;
}

void ConfidenceState::record_step(std::span<const int> state, int action, std::span<const double> rewards,
                                  std::span<const int> next_state) {
  const auto& st = *structure_;
  if (rewards.size() != st.reward_count())
    throw ConfigError("expected " + std::to_string(st.reward_count()) + " reward observations, got " +
                      std::to_string(rewards.size()));
  for (std::size_t i = 0; i < st.reward_count(); ++i) {
    const auto c = cell_r(i, st.reward_indexer(i).rank_of_state(state), action);
    ++reward_n_[i][c];
    reward_sum_[i][c] += rewards[i];
  }
  for (std::size_t j = 1; j < st.basis.size(); ++j) {
    const auto c = cell_p(j, st.basis.parent_indexer(j).rank_of_state(state), action);
    ++marg_n_[j][c];
    ++marg_out_[j][c * st.outcome_count(j) + st.basis.value_indexer(j).rank_of_state(next_state)];
  }
  ++transitions_;
}

std::optional<double> ConfidenceState::empirical_reward(std::size_t i, std::size_t z, int a) const {
  const auto n = reward_count(i, z, a);
  if (n == 0) return std::nullopt;
  return reward_sum(i, z, a) / static_cast<double>(n);
}

std::optional<Distribution> ConfidenceState::empirical_marginal(std::size_t j, std::size_t z, int a) const {
  const auto n = marginal_visits(j, z, a);
  if (n == 0) return std::nullopt;
  const std::size_t K = structure_->outcome_count(j);
  Distribution d(K);
  for (std::size_t o = 0; o < K; ++o) d[o] = static_cast<double>(outcome_count(j, z, a, o)) / static_cast<double>(n);
  return d;
}

double ConfidenceState::reward_width(std::size_t i) const {
  const auto& st = *structure_;
  return fsmdp::reward_width(sigma_, st.reward_count(),
                             st.reward_values(i) * static_cast<std::size_t>(st.space.action_count()), episode_, delta_);
}

double ConfidenceState::marginal_width(std::size_t j) const {
  const auto& st = *structure_;
  return fsmdp::marginal_width(st.outcome_count(j), st.marginal_count(), st.parent_count(j), episode_, delta_);
}

bool ConfidenceState::contains_model(const FsmdpModel& model) const {
  const auto& st = *structure_;
  if (!model.structure || !same_structure(*model.structure, st))
    throw ConfigError("model scopes do not match the confidence state's scopes");
  const int A = st.space.action_count();
  for (std::size_t i = 0; i < st.reward_count(); ++i) {
    const double d = reward_width(i);
    for (int a = 0; a < A; ++a)
      for (std::size_t z = 0; z < st.reward_values(i); ++z) {
        const auto n = reward_count(i, z, a);
        if (n == 0) continue;
        const double dev = std::abs(model.reward_mean(i, z, a) - reward_sum(i, z, a) / static_cast<double>(n));
        if (dev > std::sqrt(d / static_cast<double>(n)) + kContainTolerance) return false;
      }
  }
  for (std::size_t j = 1; j < st.basis.size(); ++j) {
    const double d = marginal_width(j);
    for (int a = 0; a < A; ++a)
      for (std::size_t z = 0; z < st.parent_count(j); ++z) {
        const auto n = marginal_visits(j, z, a);
        if (n == 0) continue;
        const auto p = model.marginal(j, z, a);
        double l1 = 0.0;
        for (std::size_t o = 0; o < p.size(); ++o)
          l1 += std::abs(p[o] - static_cast<double>(outcome_count(j, z, a, o)) / static_cast<double>(n));
        if (l1 > std::sqrt(d / static_cast<double>(n)) + kContainTolerance) return false;
      }
  }
  return true;
}

FsmdpModel ConfidenceState::empirical_model() const {
  const auto& st = *structure_;
  FsmdpModel m;
  m.structure = structure_;
  const int A = st.space.action_count();
  for (std::size_t i = 0; i < st.reward_count(); ++i) {
    auto& t = m.reward_means.emplace_back(reward_n_[i].size(), 0.0);
    for (int a = 0; a < A; ++a)
      for (std::size_t z = 0; z < st.reward_values(i); ++z) t[cell_r(i, z, a)] = empirical_reward(i, z, a).value_or(0.0);
  }
  m.marginals.resize(st.basis.size());
  for (std::size_t j = 1; j < st.basis.size(); ++j) {
    const std::size_t K = st.outcome_count(j);
    auto& t = m.marginals[j];
    t.reserve(marg_out_[j].size());
    for (int a = 0; a < A; ++a)
      for (std::size_t z = 0; z < st.parent_count(j); ++z) {
        auto d = empirical_marginal(j, z, a).value_or(Distribution(K, 1.0 / static_cast<double>(K)));
        t.insert(t.end(), d.begin(), d.end());
      }
  }
  return m;
}

nlohmann::json ConfidenceState::to_json() const {
  return {{"episode", episode_},         {"transitions", transitions_},  {"delta", delta_},
          {"sigma", sigma_},             {"reward_counts", reward_n_},   {"reward_sums", reward_sum_},
          {"marginal_counts", marg_n_},  {"outcome_counts", marg_out_}};
}

ConfidenceState ConfidenceState::from_json(std::shared_ptr<const ModelStructure> structure, const nlohmann::json& j) {
  ConfidenceState c(std::move(structure), j.at("delta").get<double>(), j.at("sigma").get<double>());
  auto load = [](auto& dst, const nlohmann::json& src, const char* name) {
    using T = std::decay_t<decltype(dst)>;
    T v = src.at(name).get<T>();
    if (v.size() != dst.size()) throw ConfigError(std::string("snapshot field ") + name + " has wrong shape");
    for (std::size_t k = 0; k < v.size(); ++k)
      if (v[k].size() != dst[k].size()) throw ConfigError(std::string("snapshot field ") + name + " has wrong shape");
    dst = std::move(v);
  };
  load(c.reward_n_, j, "reward_counts");
  load(c.reward_sum_, j, "reward_sums");
  load(c.marg_n_, j, "marginal_counts");
  load(c.marg_out_, j, "outcome_counts");
  c.episode_ = j.at("episode").get<std::uint64_t>();
  c.transitions_ = j.at("transitions").get<std::uint64_t>();
  return c;
}

}  // namespace fsmdp
