#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include <Eigen/Dense>

#include "fsmdp/elimination.hpp"
#include "fsmdp/instances.hpp"
#include "fsmdp/planner.hpp"
#include "fsmdp/simplex.hpp"
#include "fsmdp/validate.hpp"

using namespace fsmdp;

namespace {

std::size_t exact_treewidth(const CostNetwork& net) {
  std::vector<int> order(net.var_count());
  std::iota(order.begin(), order.end(), 0);
  std::size_t best = net.var_count();
  do best = std::min(best, induced_width(order, net));
  while (std::next_permutation(order.begin(), order.end()));
  return best;
}

// The bracket recomputed from raw tables with project/rank only.
double naive_bracket(const WeightMatrix& w, const OptimisticTables& t, const State& s, int a, int l) {
  const auto& st = t.structure();
  double v = 0.0;
  for (std::size_t i = 0; i < st.reward_count(); ++i)
    v += t.reward(i, rank(st.reward_scopes[i], project(s, st.reward_scopes[i]).values, st.space), a);
  for (std::size_t j = 0; j < st.basis.size(); ++j) {
    const auto& f = st.basis[j];
    v -= w.at(l, j) * f.table[rank(f.value_scope, project(s, f.value_scope).values, st.space)];
    if (l < w.tau()) {
      const auto z = rank(f.parent_scope, project(s, f.parent_scope).values, st.space);
      v += w.at(l + 1, j) * t.expectation(j, z, a, sign_of(w.at(l + 1, j)));
    }
  }
  return v;
}

FsmdpModel one_var_model(std::shared_ptr<const ModelStructure> st, double r0, double r1) {
  FsmdpModel m;
  m.structure = st;
  m.reward_means = {{r0, r1}};
  m.marginals.resize(st->basis.size());
  return m;
}

}  // namespace

TEST_SUITE("elimination") {
  TEST_CASE("cost network shapes") {
    const CostNetwork singles(3, {Scope{0}, Scope{1}, Scope{2}});
    CHECK(singles.edge_count() == 0);
    const CostNetwork full(4, {Scope::full(4)});
    CHECK(full.edge_count() == 6);
    const CostNetwork path(3, {Scope{0, 1}, Scope{1, 2}});
    CHECK(path.adjacent(0, 1));
    CHECK(path.adjacent(1, 2));
    CHECK(!path.adjacent(0, 2));
  }

  TEST_CASE("induced width") {
    const CostNetwork singles(4, {Scope{0}, Scope{1}});
    CHECK(induced_width({3, 1, 0, 2}, singles) == 0);
    const CostNetwork path(3, {Scope{0, 1}, Scope{1, 2}});
    CHECK(induced_width({0, 1, 2}, path) == 1);
    const CostNetwork cycle(4, {Scope{0, 1}, Scope{1, 2}, Scope{2, 3}, Scope{0, 3}});
    std::vector<int> order{0, 1, 2, 3};
    do CHECK(induced_width(order, cycle) == 2);
    while (std::next_permutation(order.begin(), order.end()));
    CHECK_THROWS_AS(explicit_order({0, 1, 1, 2}, cycle), ConfigError);
  }

  TEST_CASE("min-degree order") {
    const CostNetwork star(5, {Scope{0, 1}, Scope{0, 2}, Scope{0, 3}, Scope{0, 4}});
    const auto o = min_degree_order(star);
    CHECK(o.width == 1);
    CHECK(o.order.back() == 0);
    CHECK(min_degree_order(CostNetwork(4, {Scope{0, 1}, Scope{1, 2}, Scope{2, 3}})).width == 1);
    CHECK_THROWS_AS(min_degree_order(CostNetwork(5, {Scope::full(5)}), 3), ConfigError);

    Rng rng(31);
    for (int it = 0; it < 30; ++it) {
      const int m = 3 + static_cast<int>(uniform_index(rng, 5));
      std::vector<Scope> edges;
      for (int u = 0; u < m; ++u)
        for (int v = u + 1; v < m; ++v)
          if (uniform01(rng) < 0.4) edges.push_back(Scope{u, v});
      const CostNetwork net(static_cast<std::size_t>(m), edges);
      CHECK(min_degree_order(net).width >= exact_treewidth(net));
    }
  }

  TEST_CASE("one binary variable by hand") {
    const FactoredSpace space({2}, 1);
    const auto st = std::make_shared<const ModelStructure>(space, 1, std::vector<Scope>{Scope{0}}, Basis(space, {}, 1.0));
    const auto tables = OptimisticTables::from_model(one_var_model(st, 0.3, 0.7));
    WeightMatrix w(1, 1, 5.0);
    w.set(1, 0, 0.4);
    const auto sys = generate_constraints(w, 1, 0, tables, choose_order(*st, std::nullopt));
    CHECK(sys.eliminated == std::vector<int>{0});
    CHECK(sys.constraints.size() == 2);
    CHECK(sys.seed_count() >= 2);
    const auto exact = propagate_small_lp(sys);
    CHECK(exact.value == doctest::Approx(0.7 - 0.4));
    CHECK(solve_small_lp(sys).value == doctest::Approx(0.7 - 0.4));
    CHECK(extract_violating_state(sys, exact.values, space) == State{1});
  }

  TEST_CASE("hand-built small LP") {
    ConstraintSystem sys;
    sys.var_count = 3;
    sys.is_seed = {true, true, false};
    sys.seed_value = {3.0, 5.0, 0.0};
    sys.constraints = {{2, {0}, 0, 0}, {2, {1}, 0, 1}};
    sys.terminal_vars = {2};
    const auto lp = solve_small_lp(sys);
    CHECK(lp.value == doctest::Approx(5.0));
    CHECK(lp.tight == std::vector<std::size_t>{1});
  }

  TEST_CASE("random instances against brute force") {
    Rng rng(41);
    for (int it = 0; it < 60; ++it) {
      RandomStructureSpec spec;
      spec.m = 2 + static_cast<int>(uniform_index(rng, 9));
      const auto st = random_structure(spec, rng);
      const auto tables = random_tables(st, rng);
      const auto w = random_weights(st->tau, st->basis.size(), 1.0, rng);
      const EliminationTemplate tmpl(st, choose_order(*st, std::nullopt));
      for (int l = 1; l <= st->tau; ++l)
        for (int a = 0; a < 2; ++a) {
          const auto sys = tmpl.instantiate(w, l, a, tables);
          const auto [best, arg] = brute_force_bracket_max(w, tables, a, l);
          const auto exact = propagate_small_lp(sys);
          CHECK(exact.value == doctest::Approx(best).epsilon(1e-9));
          const auto s = extract_violating_state(sys, exact.values, st->space);
          CHECK(bracket_value(w, tables, s, a, l) == doctest::Approx(best).epsilon(1e-9));
          if (spec.m <= 6) CHECK(naive_bracket(w, tables, arg, a, l) == doctest::Approx(best).epsilon(1e-12));
        }
    }
  }

  TEST_CASE("zero weights reduce to rewards") {
    Rng rng(43);
    RandomStructureSpec spec;
    spec.m = 7;
    const auto st = random_structure(spec, rng);
    const auto tables = random_tables(st, rng);
    const WeightMatrix w(st->tau, st->basis.size(), 1.0);
    double best = -1e300;
    StateCursor cur(st->space);
    do {
      double r = 0.0;
      for (std::size_t i = 0; i < st->reward_count(); ++i)
        r += tables.reward(i, st->reward_indexer(i).rank_of_state(cur.state()), 1);
      best = std::max(best, r);
    } while (cur.next());
    const auto sys = generate_constraints(w, 1, 1, tables, choose_order(*st, std::nullopt));
    CHECK(propagate_small_lp(sys).value == doctest::Approx(best).epsilon(1e-12));
  }

  TEST_CASE("constraint count stays within the template bound") {
    Rng rng(44);
    RandomStructureSpec spec;
    spec.m = 9;
    const auto st = random_structure(spec, rng);
    const EliminationTemplate tmpl(st, choose_order(*st, std::nullopt));
    CHECK(tmpl.skeleton().constraints.size() <= tmpl.constraint_bound());
  }
}

TEST_SUITE("simplex") {
  // Brute force over every basic solution of a small LP in inequality form.
  double vertex_optimum(const LinearProgram& lp) {
    const std::size_t n = lp.var_count();
    std::vector<std::pair<std::vector<double>, double>> planes;
    for (const auto& r : lp.rows) {
      std::vector<double> a(n, 0.0);
      for (auto [v, c] : r.terms) a[v] += c;
      planes.emplace_back(a, r.rhs);
    }
    for (std::size_t v = 0; v < n; ++v) {
      std::vector<double> a(n, 0.0);
      a[v] = 1.0;
      planes.emplace_back(a, 0.0);
    }
    double best = 1e300;
    std::vector<std::size_t> pick(n);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t k, std::size_t from) {
      if (k == n) {
        Eigen::MatrixXd M(n, n);
        Eigen::VectorXd b(n);
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t c = 0; c < n; ++c) M(r, c) = planes[pick[r]].first[c];
          b[r] = planes[pick[r]].second;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
        if (lu.rank() < static_cast<Eigen::Index>(n)) return;
        const Eigen::VectorXd x = lu.solve(b);
        for (std::size_t v = 0; v < n; ++v)
          if (x[v] < -1e-9) return;
        for (const auto& r : lp.rows) {
          double s = 0.0;
          for (auto [v, c] : r.terms) s += c * x[v];
          if (r.sense == LinearProgram::Sense::Le && s > r.rhs + 1e-9) return;
          if (r.sense == LinearProgram::Sense::Ge && s < r.rhs - 1e-9) return;
        }
        double obj = 0.0;
        for (std::size_t v = 0; v < n; ++v) obj += lp.cost[v] * x[v];
        best = std::min(best, obj);
        return;
      }
      for (std::size_t p = from; p < planes.size(); ++p) {
        pick[k] = p;
        rec(k + 1, p + 1);
      }
    };
    rec(0, 0);
    return best;
  }

  TEST_CASE("general LPs against vertex enumeration") {
    Rng rng(51);
    int solved = 0;
    for (int it = 0; it < 80; ++it) {
      LinearProgram lp;
      const std::size_t n = 2 + uniform_index(rng, 2);
      for (std::size_t v = 0; v < n; ++v) lp.add_var(2.0 * uniform01(rng) - 1.0, false);
      // a box keeps every instance bounded
      std::vector<std::pair<std::size_t, double>> all;
      for (std::size_t v = 0; v < n; ++v) all.emplace_back(v, 1.0);
      lp.add_row(all, LinearProgram::Sense::Le, 5.0);
      for (int r = 0; r < 3; ++r) {
        std::vector<std::pair<std::size_t, double>> t;
        for (std::size_t v = 0; v < n; ++v) t.emplace_back(v, std::round(4.0 * (2.0 * uniform01(rng) - 1.0)));
        lp.add_row(t, uniform01(rng) < 0.5 ? LinearProgram::Sense::Le : LinearProgram::Sense::Ge,
                   std::round(6.0 * uniform01(rng)) - 2.0);
      }
      const auto res = solve_lp(lp);
      const double brute = vertex_optimum(lp);
      if (brute > 1e299) {
        CHECK(res.status == LpStatus::Infeasible);
        continue;
      }
      REQUIRE(res.status == LpStatus::Optimal);
      CHECK(res.objective == doctest::Approx(brute).epsilon(1e-8));
      ++solved;
    }
    CHECK(solved > 20);
  }

  TEST_CASE("unbounded and equality rows") {
    LinearProgram lp;
    lp.add_var(-1.0, false);
    lp.add_var(0.0, true);
    lp.add_row({{0, 1.0}, {1, -1.0}}, LinearProgram::Sense::Ge, 0.0);
    CHECK(solve_lp(lp).status == LpStatus::Unbounded);

    LinearProgram eq;
    eq.add_var(1.0, false);
    eq.add_var(2.0, true);
    eq.add_row({{0, 1.0}, {1, 1.0}}, LinearProgram::Sense::Eq, 3.0);
    eq.add_row({{1, 1.0}}, LinearProgram::Sense::Ge, -1.0);
    const auto r = solve_lp(eq);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.objective == doctest::Approx(4.0 - 2.0));
  }

  TEST_CASE("small LPs agree with propagation") {
    Rng rng(52);
    for (int it = 0; it < 25; ++it) {
      RandomStructureSpec spec;
      spec.m = 2 + static_cast<int>(uniform_index(rng, 7));
      const auto st = random_structure(spec, rng);
      const auto tables = random_tables(st, rng);
      const auto w = random_weights(st->tau, st->basis.size(), 1.0, rng);
      const auto sys = generate_constraints(w, 1, 0, tables, choose_order(*st, std::nullopt));
      const auto lp = solve_small_lp(sys);
      CHECK(lp.value == doctest::Approx(propagate_small_lp(sys).value).epsilon(1e-8));
      CHECK(!lp.tight.empty());
    }
  }
}
