#include "fsmdp/validate.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "fsmdp/simplex.hpp"

namespace fsmdp {

namespace {

std::size_t scoped_rank(const Scope& scope, std::span<const int> state, const FactoredSpace& space) {
  return static_cast<std::size_t>(rank(scope, project(state, scope).values, space));
}

double basis_at(const ModelStructure& st, std::size_t j, std::span<const int> state) {
  return st.basis[j].table[scoped_rank(st.basis[j].value_scope, state, st.space)];
}

/// sum_o h_j(o) P(o) straight from the stored distribution.
double expected_basis(const OptimisticTables& tables, std::size_t j, std::span<const int> state, int a, Sign s) {
  if (j == 0) return 1.0;
  const auto& st = tables.structure();
  const auto p = tables.marginal(j, scoped_rank(st.basis[j].parent_scope, state, st.space), a, s);
  double v = 0.0;
  for (std::size_t o = 0; o < p.size(); ++o) v += st.basis[j].table[o] * p[o];
  return v;
}

double naive_bracket(const WeightMatrix& w, const OptimisticTables& tables, std::span<const int> state, int a,
                     int step) {
  const auto& st = tables.structure();
  double v = 0.0;
  for (std::size_t i = 0; i < st.reward_count(); ++i)
    v += tables.reward(i, scoped_rank(st.reward_scopes[i], state, st.space), a);
  for (std::size_t j = 0; j < st.basis.size(); ++j) {
    const double wn = w.at(step + 1, j);
    v += -w.at(step, j) * basis_at(st, j, state) + wn * expected_basis(tables, j, state, a, sign_of(wn));
  }
  return v;
}

}  // namespace

TabularMdp tabulate(const Environment& env, std::uint64_t limit) {
  TabularMdp m;
  m.space = env.space();
  m.tau = env.tau();
  m.states = static_cast<std::size_t>(env.space().checked_joint_size(limit));
  const int A = m.space.action_count();
  m.reward.resize(m.states * static_cast<std::size_t>(A));
  m.transition.resize(m.states * static_cast<std::size_t>(A) * m.states);
  StateCursor cur(m.space);
  std::size_t s = 0;
  do {
    for (int a = 0; a < A; ++a) {
      const std::size_t cell = s * static_cast<std::size_t>(A) + static_cast<std::size_t>(a);
      m.reward[cell] = env.expected_reward(cur.state(), a);
      const auto row = env.transition_row(cur.state(), a);
      std::copy(row.begin(), row.end(), m.transition.begin() + static_cast<std::ptrdiff_t>(cell * m.states));
    }
    ++s;
  } while (cur.next());
  return m;
}

TabularValueFunction tabular_vi(const TabularMdp& m) {
  const int A = m.space.action_count();
  TabularValueFunction v;
  v.tau = m.tau;
  v.values.assign(static_cast<std::size_t>(m.tau) + 1, std::vector<double>(m.states, 0.0));
  for (int l = m.tau; l >= 1; --l) {
    const auto& next = v.values[static_cast<std::size_t>(l)];
    auto& cur = v.values[static_cast<std::size_t>(l - 1)];
    for (std::size_t s = 0; s < m.states; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < A; ++a) {
        const std::size_t cell = s * static_cast<std::size_t>(A) + static_cast<std::size_t>(a);
        double q = m.reward[cell];
        for (std::size_t t = 0; t < m.states; ++t) q += m.transition[cell * m.states + t] * next[t];
        best = std::max(best, q);
      }
      cur[s] = best;
    }
  }
  return v;
}

TabularValueFunction tabular_vi(const Environment& env) { return tabular_vi(tabulate(env)); }

TabularValueFunction policy_evaluation(const TabularMdp& m, std::span<const int> policy) {
  const int A = m.space.action_count();
  TabularValueFunction v;
  v.tau = m.tau;
  v.values.assign(static_cast<std::size_t>(m.tau) + 1, std::vector<double>(m.states, 0.0));
  for (int l = m.tau; l >= 1; --l) {
    const auto& next = v.values[static_cast<std::size_t>(l)];
    auto& cur = v.values[static_cast<std::size_t>(l - 1)];
    for (std::size_t s = 0; s < m.states; ++s) {
      const int a = policy[static_cast<std::size_t>(l - 1) * m.states + s];
      const std::size_t cell = s * static_cast<std::size_t>(A) + static_cast<std::size_t>(a);
      double q = m.reward[cell];
      for (std::size_t t = 0; t < m.states; ++t) q += m.transition[cell * m.states + t] * next[t];
      cur[s] = q;
    }
  }
  return v;
}

std::pair<double, State> brute_force_bracket_max(const WeightMatrix& w, const OptimisticTables& tables, int action,
                                                 int step) {
  const auto& space = tables.structure().space;
  space.checked_joint_size(std::uint64_t{1} << 14);
  StateCursor cur(space);
  double best = -std::numeric_limits<double>::infinity();
  State arg;
  do {
    const double v = naive_bracket(w, tables, cur.state(), action, step);
    if (v > best) {
      best = v;
      arg = cur.state();
    }
  } while (cur.next());
  return {best, arg};
}

double exhaustive_max_violation(const WeightMatrix& w, const OptimisticTables& tables) {
  double best = -std::numeric_limits<double>::infinity();
  for (int l = 1; l <= w.tau(); ++l)
    for (int a = 0; a < tables.structure().space.action_count(); ++a)
      best = std::max(best, brute_force_bracket_max(w, tables, a, l).first);
  return best;
}

Distribution vertex_enum_transition_opt(std::span<const double> empirical, double half_width,
                                        std::span<const double> h, Sign sign) {
  const auto K = static_cast<int>(empirical.size());
  if (K < 1 || K > 5) throw ScaleError("vertex enumeration supports 1 to 5 outcomes");
  const double r = 2.0 * half_width;
  const int n = 2 * K;
  const int rows = 3 * K + 1;
  // inequalities G y >= g over y = (P, d)
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(rows, n);
  Eigen::VectorXd g(rows);
  for (int i = 0; i < K; ++i) {
    G(i, i) = 1.0;
    g[i] = 0.0;
    G(K + i, K + i) = 1.0;
    G(K + i, i) = -1.0;
    g[K + i] = -empirical[i];
    G(2 * K + i, K + i) = 1.0;
    G(2 * K + i, i) = 1.0;
    g[2 * K + i] = empirical[i];
  }
  for (int i = 0; i < K; ++i) G(3 * K, K + i) = -1.0;
  g[3 * K] = -r;

  const double sgn = sign == Sign::NonNegative ? 1.0 : -1.0;
  double best = -std::numeric_limits<double>::infinity();
  Distribution arg;
  Eigen::MatrixXd M(n, n);
  Eigen::VectorXd b(n);
  for (std::uint32_t mask = 0; mask < (1u << rows); ++mask) {
    if (std::popcount(mask) != n - 1) continue;
    int k = 0;
    for (int i = 0; i < rows; ++i)
      if (mask & (1u << i)) {
        M.row(k) = G.row(i);
        b[k++] = g[i];
      }
    M.row(k).setZero();
    M.row(k).head(K).setOnes();
    b[k] = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd y = lu.solve(b);
    if (((G * y - g).array() < -1e-12).any() || std::abs(y.head(K).sum() - 1.0) > 1e-12) continue;
    double obj = 0.0;
    for (int i = 0; i < K; ++i) obj += sgn * h[i] * y[i];
    if (obj > best + 1e-15) {
      best = obj;
      arg.assign(y.data(), y.data() + K);
    }
  }
  if (arg.empty()) throw InvariantError("vertex enumeration found no feasible vertex");
  for (auto& p : arg) p = std::max(0.0, p);
  return arg;
}

ExhaustivePlan exhaustive_lp_plan(const OptimisticTables& tables, double W) {
  const auto& st = tables.structure();
  const auto& space = st.space;
  space.checked_joint_size(std::uint64_t{1} << 8);
  if (st.tau > 3) throw ScaleError("exhaustive LP planning supports tau <= 3");
  const int tau = st.tau;
  const int A = space.action_count();
  const std::size_t phi = st.basis.size();

  std::vector<State> states;
  StateCursor cur(space);
  do states.push_back(cur.state());
  while (cur.next());

  LinearProgram lp;
  WeightMatrix shape(tau, phi, W);
  for (int l = 1; l <= tau; ++l)
    for (std::size_t j = 0; j < phi; ++j) lp.add_var(0.0, true);
  for (std::size_t j = 0; j < phi; ++j)
    for (const auto& s : states) lp.cost[shape.coord(1, j)] += basis_at(st, j, s);

  // t[(l, j, pa, a)] >= w^{(l+1)}_j E^{+/-}_j(pa, a)
  std::vector<std::vector<std::size_t>> t_var(static_cast<std::size_t>(tau) * phi);
  for (int l = 1; l < tau; ++l)
    for (std::size_t j = 0; j < phi; ++j) {
      const std::size_t pa_count = j == 0 ? 1 : st.parent_count(j);
      auto& tv = t_var[shape.coord(l, j)];
      for (std::size_t pa = 0; pa < pa_count; ++pa)
        for (int a = 0; a < A; ++a) {
          const std::size_t t = lp.add_var(0.0, true);
          tv.push_back(t);
          for (Sign sg : {Sign::NonNegative, Sign::Negative}) {
            double e = 1.0;
            if (j > 0) {
              const auto p = tables.marginal(j, pa, a, sg);
              e = 0.0;
              for (std::size_t o = 0; o < p.size(); ++o) e += st.basis[j].table[o] * p[o];
            }
            lp.add_row({{t, 1.0}, {shape.coord(l + 1, j), -e}}, LinearProgram::Sense::Ge, 0.0);
          }
        }
    }

  for (int l = 1; l <= tau; ++l)
    for (const auto& s : states)
      for (int a = 0; a < A; ++a) {
        std::vector<std::pair<std::size_t, double>> terms;
        for (std::size_t j = 0; j < phi; ++j) {
          terms.emplace_back(shape.coord(l, j), -basis_at(st, j, s));
          if (l < tau) {
            const std::size_t pa = j == 0 ? 0 : scoped_rank(st.basis[j].parent_scope, s, space);
            terms.emplace_back(t_var[shape.coord(l, j)][pa * static_cast<std::size_t>(A) + static_cast<std::size_t>(a)],
                               1.0);
          }
        }
        double r = 0.0;
        for (std::size_t i = 0; i < st.reward_count(); ++i)
          r += tables.reward(i, scoped_rank(st.reward_scopes[i], s, space), a);
        lp.add_row(std::move(terms), LinearProgram::Sense::Le, -r);
      }

  for (int l = 1; l <= tau; ++l) {
    std::vector<std::pair<std::size_t, double>> sum;
    for (std::size_t j = 0; j < phi; ++j) {
      const std::size_t aux = lp.add_var(0.0, false);
      lp.add_row({{aux, 1.0}, {shape.coord(l, j), -1.0}}, LinearProgram::Sense::Ge, 0.0);
      lp.add_row({{aux, 1.0}, {shape.coord(l, j), 1.0}}, LinearProgram::Sense::Ge, 0.0);
      sum.emplace_back(aux, 1.0);
    }
    lp.add_row(std::move(sum), LinearProgram::Sense::Le, W);
  }

  SimplexOptions opt;
  opt.max_pivots = 1000000;
  const auto res = solve_lp(lp, opt);
  if (res.status != LpStatus::Optimal) throw SolverError("exhaustive planning LP did not reach an optimum");
  ExhaustivePlan out{WeightMatrix(tau, phi, W, std::vector<double>(res.x.begin(), res.x.begin() + tau * phi)),
                     res.objective};
  return out;
}

double naive_objective(const WeightMatrix& w, const FactoredSpace& space, const Basis& basis) {
  StateCursor cur(space);
  double total = 0.0;
  do
    for (std::size_t j = 0; j < basis.size(); ++j)
      total += w.at(1, j) * basis[j].table[static_cast<std::size_t>(rank(basis[j].value_scope,
                                                                        project(cur.state(), basis[j].value_scope).values, space))];
  while (cur.next());
  return total;
}

}  // namespace fsmdp
