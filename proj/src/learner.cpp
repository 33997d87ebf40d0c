#include "fsmdp/learner.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fsmdp {

int greedy_action(const WeightMatrix& w, const OptimisticTables& tables, std::span<const int> state, int step) {
  const auto& st = tables.structure();
  int best_a = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < st.space.action_count(); ++a) {
    double q = 0.0;
    for (std::size_t i = 0; i < st.reward_count(); ++i) q += tables.reward(i, st.reward_indexer(i).rank_of_state(state), a);
    for (std::size_t j = 0; j < st.basis.size(); ++j) {
      const double wn = w.at(step + 1, j);
      if (wn != 0.0) q += wn * tables.expectation(j, st.basis.parent_indexer(j).rank_of_state(state), a, sign_of(wn));
    }
    if (q > best) {
      best = q;
      best_a = a;
    }
  }
  return best_a;
}

Trajectory run_episode(const Environment& env, const WeightMatrix& w, const OptimisticTables& tables,
                       ConfidenceState& confidence, Rng& rng) {
  Trajectory t;
  State s = env.reset(rng);
  for (int l = 1; l <= env.tau(); ++l) {
    const int a = greedy_action(w, tables, s, l);
    auto res = env.step(s, a, rng);
    confidence.record_step(s, a, res.rewards, res.next_state);
    for (double r : res.rewards) t.total_reward += r;
    t.states.push_back(s);
    t.actions.push_back(a);
    t.rewards.push_back(std::move(res.rewards));
    s = std::move(res.next_state);
  }
  t.states.push_back(std::move(s));
  return t;
}

double theoretical_bound(double phi, double tau, double W, double G, double T, double J, double N, double zeta,
                         double delta) {
  if (W * G < 1.0) throw ConfigError("the regret bound assumes W * G >= 1 (got " + std::to_string(W * G) + ")");
  return tau * (30.0 * phi * W * G * std::sqrt(T * J * (J * std::log(2.0) + std::log(2.0 * N * zeta * T * T / delta))));
}

BoundParams bound_params(const ModelStructure& st, double W) {
  BoundParams p;
  p.phi = static_cast<double>(st.basis.size());
  p.tau = st.tau;
  p.W = W;
  p.G = st.basis.bound();
  p.N = static_cast<double>(std::max<std::size_t>(st.marginal_count(), 1));
  std::size_t J = 1, zeta = 1;
  for (std::size_t j = 1; j < st.basis.size(); ++j) {
    J = std::max(J, st.parent_count(j));
    zeta = std::max(zeta, st.basis[j].parent_scope.size());
  }
  for (std::size_t i = 0; i < st.reward_count(); ++i) {
    J = std::max(J, st.reward_values(i));
    zeta = std::max(zeta, st.reward_scopes[i].size());
  }
  p.J = static_cast<double>(J);
  p.zeta = static_cast<double>(zeta);
  return p;
}

double theoretical_bound(const BoundParams& p, double episodes, double delta) {
  return theoretical_bound(p.phi, p.tau, p.W, p.G, episodes * p.tau, p.J, p.N, p.zeta, delta);
}

ExactEvaluator::ExactEvaluator(const Environment& env, std::uint64_t limit)
    : space_(env.space()), tau_(env.tau()), actions_(env.space().action_count()) {
  const auto n = static_cast<std::size_t>(space_.checked_joint_size(limit));
  rows_.reserve(n * static_cast<std::size_t>(actions_));
  StateCursor cur(space_);
  do {
    for (int a = 0; a < actions_; ++a) {
      Row r;
      r.reward = env.expected_reward(cur.state(), a);
      const auto p = env.transition_row(cur.state(), a);
      for (std::size_t k = 0; k < p.size(); ++k)
        if (p[k] > 0.0) {
          r.next.push_back(static_cast<std::uint32_t>(k));
          r.prob.push_back(p[k]);
        }
      rows_.push_back(std::move(r));
    }
  } while (cur.next());

  std::vector<double> next(n, 0.0), cur_v(n);
  for (int l = tau_; l >= 1; --l) {
    for (std::size_t s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < actions_; ++a) {
        const auto& r = row(s, a);
        double q = r.reward;
        for (std::size_t k = 0; k < r.next.size(); ++k) q += r.prob[k] * next[r.next[k]];
        best = std::max(best, q);
      }
      cur_v[s] = best;
    }
    std::swap(next, cur_v);
  }
  v_star_ = std::move(next);
}

double ExactEvaluator::optimal_value(std::span<const int> state) const {
  return v_star_[rank(Scope::full(space_.var_count()), state, space_)];
}

double ExactEvaluator::policy_value(const WeightMatrix& w, const OptimisticTables& tables,
                                    std::span<const int> state) const {
  const std::size_t n = v_star_.size();
  std::vector<double> next(n, 0.0), cur_v(n);
  for (int l = tau_; l >= 1; --l) {
    StateCursor cur(space_);
    std::size_t s = 0;
    do {
      const auto& r = row(s, greedy_action(w, tables, cur.state(), l));
      double v = r.reward;
      for (std::size_t k = 0; k < r.next.size(); ++k) v += r.prob[k] * next[r.next[k]];
      cur_v[s++] = v;
    } while (cur.next());
    std::swap(next, cur_v);
  }
  return next[rank(Scope::full(space_.var_count()), state, space_)];
}

Learner::Learner(const Environment& env, std::shared_ptr<const ModelStructure> structure, LearnerOptions options,
                 std::uint64_t seed)
    : env_(env),
      structure_(structure),
      opt_(std::move(options)),
      planner_(structure, opt_.planner),
      conf_(structure, opt_.delta, opt_.sigma),
      rng_(seed),
      bound_(bound_params(*structure, opt_.planner.W)) {
  const auto size = env.space().joint_size();
  if (size && *size <= opt_.exact_limit) evaluator_.emplace(env, opt_.exact_limit);
  if (opt_.track_coverage) truth_ = env.to_model(structure);
}

TraceRow Learner::step_episode() {
  ++k_;
  conf_.begin_episode(k_);
  TraceRow row;
  row.k = k_;
  row.epsilon = std::sqrt(1.0 / static_cast<double>(k_));
  if (truth_) row.model_covered = conf_.contains_model(*truth_);

  const auto plan = planner_.plan(conf_, row.epsilon);
  const auto traj = run_episode(env_, plan.w, plan.tables, conf_, rng_);
  row.realized_reward = traj.total_reward;
  reward_total_ += traj.total_reward;

  if (evaluator_) {
    const auto& s0 = traj.states.front();
    row.optimal_value = evaluator_->optimal_value(s0);
    row.regret = *row.optimal_value - evaluator_->policy_value(plan.w, plan.tables, s0);
  } else {
    best_average_ = std::max(best_average_, reward_total_ / static_cast<double>(k_));
    row.regret = best_average_ - traj.total_reward;
    row.proxy = true;
  }
  cumulative_ += row.regret;
  row.cumulative_regret = cumulative_;
  if (bound_.W * bound_.G >= 1.0) row.bound = theoretical_bound(bound_, static_cast<double>(k_), opt_.delta);
  return row;
}

RegretTrace Learner::run(std::uint64_t K, const std::function<void(const TraceRow&)>& on_row) {
  if (K < 1) throw ConfigError("episode count K must be >= 1");
  RegretTrace trace;
  while (k_ < K) {
    trace.rows.push_back(step_episode());
    if (on_row) on_row(trace.rows.back());
  }
  return trace;
}

nlohmann::json Learner::snapshot() const {
  std::ostringstream rng;
  rng << rng_;
  nlohmann::json j{{"episode", k_},
                   {"cumulative_regret", cumulative_},
                   {"reward_total", reward_total_},
                   {"rng", rng.str()},
                   {"confidence", conf_.to_json()}};
  j["best_average"] = std::isfinite(best_average_) ? nlohmann::json(best_average_) : nlohmann::json(nullptr);
  return j;
}

void Learner::restore(const nlohmann::json& snap) {
  conf_ = ConfidenceState::from_json(structure_, snap.at("confidence"));
  k_ = snap.at("episode").get<std::uint64_t>();
  cumulative_ = snap.at("cumulative_regret").get<double>();
  reward_total_ = snap.at("reward_total").get<double>();
  const auto& ba = snap.at("best_average");
  best_average_ = ba.is_null() ? -std::numeric_limits<double>::infinity() : ba.get<double>();
  std::istringstream rng(snap.at("rng").get<std::string>());
  rng >> rng_;
  if (!rng) throw ConfigError("snapshot has a malformed RNG state");
}

}  // namespace fsmdp
