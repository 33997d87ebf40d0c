#include "fsmdp/optimism.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fsmdp {

namespace {

std::vector<std::size_t> outcome_order(std::span<const double> h, Sign sign) {
  std::vector<std::size_t> order(h.size());
  std::iota(order.begin(), order.end(), 0);
  if (sign == Sign::NonNegative)
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return h[a] > h[b]; });
  else
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return h[a] < h[b]; });
  return order;
}

}  // namespace

Distribution optimistic_marginal(std::span<const double> h, const std::optional<Distribution>& empirical,
                                 double half_width, Sign sign) {
  const auto order = outcome_order(h, sign);
  Distribution p(h.size(), 0.0);
  if (!empirical) {
    p[order.front()] = 1.0;
    return p;
  }
  p = *empirical;
  p[order.front()] = std::min(1.0, p[order.front()] + half_width);
  double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (std::size_t i = order.size() - 1; total > 1.0 && i > 0; --i) {
    const std::size_t o = order[i];
    const double others = total - p[o];
    p[o] = std::max(0.0, 1.0 - others);
    total = others + p[o];
  }
  return p;
}

double optimistic_reward(const ConfidenceState& conf, std::size_t i, std::size_t z, int a,
                         const TableOptions& options) {
  const auto n = conf.reward_count(i, z, a);
  if (n == 0) return options.C;
  const double d = options.width_scale * conf.reward_width(i);
  const double v = conf.reward_sum(i, z, a) / static_cast<double>(n) + std::sqrt(d / static_cast<double>(n));
  return options.clip_reward ? std::min(v, options.C) : v;
}

OptimisticTables OptimisticTables::build(const ConfidenceState& conf, const TableOptions& options) {
  OptimisticTables t;
  t.structure_ = conf.structure_ptr();
  const auto& st = *t.structure_;
  const int A = st.space.action_count();

  for (std::size_t i = 0; i < st.reward_count(); ++i) {
    auto& r = t.reward_.emplace_back(static_cast<std::size_t>(A) * st.reward_values(i));
    for (int a = 0; a < A; ++a)
      for (std::size_t z = 0; z < st.reward_values(i); ++z)
        r[static_cast<std::size_t>(a) * st.reward_values(i) + z] = optimistic_reward(conf, i, z, a, options);
  }

  t.marg_.resize(st.basis.size());
  for (std::size_t j = 1; j < st.basis.size(); ++j) {
    const auto& h = st.basis[j].table;
    const std::size_t K = st.outcome_count(j);
    const double d = options.width_scale * conf.marginal_width(j);
    auto& m = t.marg_[j];
    m.resize(static_cast<std::size_t>(A) * st.parent_count(j) * 2 * K);
    for (int a = 0; a < A; ++a)
      for (std::size_t z = 0; z < st.parent_count(j); ++z) {
        const auto emp = conf.empirical_marginal(j, z, a);
        const auto n = conf.marginal_visits(j, z, a);
        const double half = n == 0 ? 0.0 : 0.5 * std::sqrt(d / static_cast<double>(n));
        for (Sign s : {Sign::NonNegative, Sign::Negative}) {
          const auto p = optimistic_marginal(h, emp, half, s);
          std::copy(p.begin(), p.end(), m.begin() + static_cast<std::ptrdiff_t>(t.slot(j, z, a, s) * K));
        }
      }
  }
  t.fill_expectations();
  return t;
}

OptimisticTables OptimisticTables::from_model(const FsmdpModel& model) {
  OptimisticTables t;
  t.structure_ = model.structure;
  const auto& st = *t.structure_;
  const int A = st.space.action_count();
  t.reward_ = model.reward_means;
  t.marg_.resize(st.basis.size());
  for (std::size_t j = 1; j < st.basis.size(); ++j) {
    const std::size_t K = st.outcome_count(j);
    auto& m = t.marg_[j];
    m.resize(static_cast<std::size_t>(A) * st.parent_count(j) * 2 * K);
    for (int a = 0; a < A; ++a)
      for (std::size_t z = 0; z < st.parent_count(j); ++z) {
        const auto p = model.marginal(j, z, a);
        for (Sign s : {Sign::NonNegative, Sign::Negative})
          std::copy(p.begin(), p.end(), m.begin() + static_cast<std::ptrdiff_t>(t.slot(j, z, a, s) * K));
      }
  }
  t.fill_expectations();
  return t;
}

void OptimisticTables::fill_expectations() {
  const auto& st = *structure_;
  expect_.assign(st.basis.size(), {});
  for (std::size_t j = 1; j < st.basis.size(); ++j) {
    const auto& h = st.basis[j].table;
    const std::size_t K = h.size();
    const std::size_t slots = marg_[j].size() / K;
    auto& e = expect_[j];
    e.resize(slots);
    for (std::size_t s = 0; s < slots; ++s) {
      double v = 0.0;
      for (std::size_t o = 0; o < K; ++o) v += h[o] * marg_[j][s * K + o];
      e[s] = v;
    }
  }
}

std::size_t OptimisticTables::reward_entry_count() const {
  std::size_t n = 0;
  for (const auto& r : reward_) n += r.size();
  return n;
}

std::size_t OptimisticTables::marginal_distribution_count() const {
  std::size_t n = 0;
  for (std::size_t j = 1; j < marg_.size(); ++j) n += marg_[j].size() / structure_->outcome_count(j);
  return n;
}

}  // namespace fsmdp
