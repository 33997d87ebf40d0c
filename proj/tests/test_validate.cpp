#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fsmdp/instances.hpp"
#include "fsmdp/planner.hpp"
#include "fsmdp/validate.hpp"

using namespace fsmdp;

TEST_SUITE("oracle-validate") {
  TEST_CASE("value iteration") {
    const FactoredSpace space({2, 2}, 2);
    Cluster cl{Scope{0, 1}, Scope{0, 1}, {}, {}};
    Rng rng(81);
    for (int c = 0; c < 8; ++c) {
      std::vector<double> p(4);
      double t = 0;
      for (auto& v : p) t += (v = uniform01(rng) + 0.1);
      for (auto& v : p) cl.table.push_back(v / t);
    }
    const Environment zero(space, {{Scope{0}, std::vector<double>(4, 0.0), 0.0, 0.0, 1.0}},
                           JointTransitionSpec::product({{cl}}), {}, 3);
    const auto vz = tabular_vi(zero);
    for (const auto& slice : vz.values)
      for (const double v : slice) CHECK(v == 0.0);
    CHECK(vz.values.size() == 4);

    const std::vector<double> mean{0.1, 0.9, 0.6, 0.2};
    const Environment one(space, {{Scope{0}, mean, 0.0, 0.0, 1.0}}, JointTransitionSpec::product({{cl}}), {}, 1);
    const auto v1 = tabular_vi(one);
    StateCursor cur(space);
    std::size_t s = 0;
    do {
      const int x = cur.state()[0];
      CHECK(v1.at(1, s) == std::max(mean[x], mean[2 + x]));
      ++s;
    } while (cur.next());
    CHECK_THROWS_AS(tabulate(make_safe_action_family(15, 1).env), ScaleError);
  }

  TEST_CASE("brute-force bracket") {
    Rng rng(82);
    RandomStructureSpec spec;
    spec.m = 5;
    const auto st = random_structure(spec, rng);
    const auto tables = random_tables(st, rng);
    const WeightMatrix zero(st->tau, st->basis.size(), 1.0);
    double best = -1e300;
    StateCursor cur(st->space);
    do {
      double r = 0;
      for (std::size_t i = 0; i < st->reward_count(); ++i)
        r += tables.reward(i, st->reward_indexer(i).rank_of_state(cur.state()), 0);
      best = std::max(best, r);
    } while (cur.next());
    CHECK(brute_force_bracket_max(zero, tables, 0, 1).first == doctest::Approx(best).epsilon(1e-15));

    // one binary variable, h_0 only: the bracket is R(x) - w_0
    const FactoredSpace one({2}, 1);
    const auto ost = std::make_shared<const ModelStructure>(one, 1, std::vector<Scope>{Scope{0}}, Basis(one, {}, 1.0));
    const auto ot = OptimisticTables::from_model(FsmdpModel{ost, {{0.25, 0.75}}, {{}}});
    WeightMatrix w(1, 1, 1.0);
    w.set(1, 0, 0.5);
    const auto [v, arg] = brute_force_bracket_max(w, ot, 0, 1);
    CHECK(v == doctest::Approx(0.25));
    CHECK(arg == State{1});
  }

  TEST_CASE("vertex enumeration") {
    const std::vector<double> p{0.2, 0.5, 0.3}, h{1.0, 0.0, 2.0};
    const auto same = vertex_enum_transition_opt(p, 0.0, h, Sign::NonNegative);
    for (std::size_t k = 0; k < 3; ++k) CHECK(same[k] == doctest::Approx(p[k]).epsilon(1e-12));
    const auto q = vertex_enum_transition_opt(std::vector<double>{0.5, 0.5}, 0.3, std::vector<double>{1.0, 0.0},
                                              Sign::NonNegative);
    CHECK(q[0] == doctest::Approx(0.8));
    CHECK(q[1] == doctest::Approx(0.2));
  }

  TEST_CASE("exponential LP at zero width matches value iteration") {
    Rng rng(83);
    for (const int bits : {1, 2, 3}) {
      auto gen = tabular_environment(bits, 2, 2, rng);
      const auto st = structure_for(gen);
      const auto tables = OptimisticTables::from_model(gen.env.to_model(st));
      const auto vi = tabular_vi(gen.env);
      const auto plan = exhaustive_lp_plan(tables, 40.0);
      const std::size_t n = std::size_t{1} << bits;
      CHECK(plan.objective == doctest::Approx(std::accumulate(vi.values[0].begin(), vi.values[0].end(), 0.0)).epsilon(1e-9));
      // step-1 weights reproduce V_1 exactly
      for (std::size_t s = 0; s < n; ++s) {
        const double v = plan.w.at(1, 0) + (s ? plan.w.at(1, s) : 0.0);
        CHECK(v == doctest::Approx(vi.at(1, s)).epsilon(1e-9));
      }
    }
    CHECK_THROWS_AS(exhaustive_lp_plan(OptimisticTables::from_model(make_safe_action_family(9, 1).env.to_model(
                                           structure_for(make_safe_action_family(9, 1)))),
                                       10.0),
                    ScaleError);
  }

  TEST_CASE("ellipsoid planner against the exponential LP") {
    Rng rng(84);
    for (int it = 0; it < 20; ++it) {
      RandomStructureSpec spec;
      spec.m = 2 + static_cast<int>(uniform_index(rng, 2));
      spec.bases = 1 + static_cast<int>(uniform_index(rng, 2));
      spec.tau = 1 + static_cast<int>(uniform_index(rng, 2));
      const auto st = random_structure(spec, rng);
      const auto tables = random_tables(st, rng);
      const double W = 6.0;
      const auto exact = exhaustive_lp_plan(tables, W);  // h_0 keeps this feasible
      PlannerOptions opt;
      opt.W = W;
      const auto plan = Planner(st, opt).plan_with_tables(tables, 1e-3);
      CHECK(plan.objective >= exact.objective - 1e-7);
      CHECK(plan.objective <= exact.objective + 1e-3);
      CHECK(exhaustive_max_violation(plan.w, tables) <= 1e-7);
    }
  }
}
