#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fsmdp/instances.hpp"
#include "fsmdp/planner.hpp"
#include "fsmdp/validate.hpp"

using namespace fsmdp;

namespace {

// Exact VI weights for the tabular basis: w_0 = V(s_0), w_k = V(s_k) - V(s_0).
WeightMatrix tabular_weights(const TabularValueFunction& vi, int tau, std::size_t n, double W) {
  WeightMatrix w(tau, n, W);
  for (int l = 1; l <= tau; ++l) {
    w.set(l, 0, vi.at(l, 0));
    for (std::size_t k = 1; k < n; ++k) w.set(l, k, vi.at(l, k) - vi.at(l, 0));
  }
  return w;
}

}  // namespace

TEST_SUITE("planner") {
  TEST_CASE("objective") {
    const FactoredSpace space({2, 2, 2}, 1);
    const Basis h0(space, {}, 1.0);
    WeightMatrix w(1, 1, 2.0);
    CHECK(evaluate_objective(w, space, h0) == 0.0);
    w.set(1, 0, 1.0);
    CHECK(evaluate_objective(w, space, h0) == 8.0);

    Rng rng(61);
    for (int it = 0; it < 20; ++it) {
      RandomStructureSpec spec;
      spec.m = 2 + static_cast<int>(uniform_index(rng, 9));
      const auto st = random_structure(spec, rng);
      const auto rw = random_weights(st->tau, st->basis.size(), 1.0, rng);
      const double naive = naive_objective(rw, st->space, st->basis);
      CHECK(evaluate_objective(rw, st->space, st->basis) == doctest::Approx(naive).epsilon(1e-9));
      const auto c = objective_coefficients(*st);
      CHECK(std::inner_product(c.begin(), c.end(), rw.flat().begin(), 0.0) == doctest::Approx(naive).epsilon(1e-9));
    }
  }

  TEST_CASE("oracle accepts exact tabular weights") {
    Rng rng(62);
    auto gen = tabular_environment(2, 2, 2, rng);
    const auto st = structure_for(gen);
    const auto tables = OptimisticTables::from_model(gen.env.to_model(st));
    const auto w = tabular_weights(tabular_vi(gen.env), 2, 4, 50.0);
    const EliminationTemplate tmpl(st, choose_order(*st, std::nullopt));
    SeparationOracle oracle(tables, tmpl, 50.0);
    CHECK(oracle(w).feasible);
    CHECK(exhaustive_max_violation(w, tables) <= 1e-12);
  }

  TEST_CASE("oracle cuts") {
    Rng rng(63);
    RandomStructureSpec spec;
    spec.m = 4;
    const auto st = random_structure(spec, rng);
    const auto tables = random_tables(st, rng);
    const EliminationTemplate tmpl(st, choose_order(*st, std::nullopt));
    const double W = 10.0;
    SeparationOracle oracle(tables, tmpl, W);

    WeightMatrix w(st->tau, st->basis.size(), W);
    w.set(1, 0, -6.0);
    const auto v = oracle(w);
    REQUIRE(!v.feasible);
    CHECK(!v.norm_cut);
    REQUIRE(v.violation.has_value());
    CHECK(v.cut.eval(w.flat()) > 0.0);
    CHECK(v.violation->value == doctest::Approx(brute_force_bracket_max(w, tables, v.violation->action, v.violation->step).first));

    // feasible points from h_0 alone plus noise, by rejection
    int accepted = 0;
    for (int k = 0; k < 400; ++k) {
      WeightMatrix x(st->tau, st->basis.size(), W);
      for (int l = 1; l <= st->tau; ++l) x.set(l, 0, (st->tau - l + 1) * 2.0 + 1.0);
      for (auto& e : x.flat()) e += 0.3 * (2.0 * uniform01(rng) - 1.0);
      if (exhaustive_max_violation(x, tables) > 0.0 || x.l1_norm(1) > W || x.l1_norm(st->tau) > W) continue;
      ++accepted;
      CHECK(v.cut.eval(x.flat()) <= 1e-7);
    }
    CHECK(accepted > 50);

    // only the norm ball is violated: no LP is solved
    WeightMatrix big(st->tau, st->basis.size(), W);
    for (int l = 1; l <= st->tau; ++l) big.set(l, 0, 30.0);
    const auto before = oracle.lp_solves();
    const auto nv = oracle(big);
    CHECK(!nv.feasible);
    CHECK(nv.norm_cut);
    CHECK(oracle.lp_solves() == before);
    CHECK(nv.cut.eval(big.flat()) > 0.0);
  }

  TEST_CASE("ellipsoid on a one-dimensional problem") {
    // minimize x subject to x >= 0.3 inside [-1, 1]
    const std::vector<double> c{1.0};
    const CutOracle oracle = [](std::span<const double> x) -> std::optional<Hyperplane> {
      if (x[0] >= 0.3) return std::nullopt;
      return Hyperplane{{-1.0}, 0.3};
    };
    CuttingPlaneOptions opt;
    opt.epsilon = 1e-6;
    opt.radius = 1.0;
    const auto r = cutting_plane_solve(c, oracle, opt);
    CHECK(r.status == CuttingPlaneStatus::Certified);
    CHECK(r.value == doctest::Approx(0.3).epsilon(1e-5));
    CHECK(r.value >= 0.3);
  }

  TEST_CASE("ellipsoid volume shrinks") {
    const std::vector<double> c{1.0, 1.0, 1.0};
    const CutOracle oracle = [](std::span<const double> x) -> std::optional<Hyperplane> {
      if (x[0] + x[1] + x[2] >= 1.0) return std::nullopt;
      return Hyperplane{{-1.0, -1.0, -1.0}, 1.0};
    };
    CuttingPlaneOptions opt;
    opt.epsilon = 1e-4;
    opt.radius = 4.0;
    const auto r = cutting_plane_solve(c, oracle, opt, true);
    CHECK(r.status == CuttingPlaneStatus::Certified);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-3));
    for (std::size_t k = 1; k < r.log_det.size(); ++k) CHECK(r.log_det[k] < r.log_det[k - 1]);
    CHECK(ellipsoid_budget(3, 4.0, std::sqrt(3.0), 1e-4) ==
          static_cast<std::size_t>(std::ceil(24.0 * std::log(3.0 * 4.0 * std::sqrt(3.0) / 1e-4))));
  }

  TEST_CASE("trivial instance with V* = 0") {
    const auto gen = make_two_state_env();
    const auto st = structure_for(gen);
    const auto tables = OptimisticTables::from_model(gen.env.to_model(st));
    PlannerOptions opt;
    opt.W = 4.0;
    opt.tables.C = 0.0;
    const Planner planner(st, opt);
    const auto plan = planner.plan_with_tables(tables, 1e-3);
    CHECK(plan.objective <= 1e-3);
    CHECK(plan.objective >= -1e-9);
  }

  TEST_CASE("tabular planning and epsilon monotonicity") {
    Rng rng(64);
    auto gen = tabular_environment(3, 2, 2, rng);
    const auto st = structure_for(gen);
    const auto tables = OptimisticTables::from_model(gen.env.to_model(st));
    PlannerOptions opt;
    opt.W = 20.0;
    const Planner planner(st, opt);
    const auto exhaustive = exhaustive_lp_plan(tables, 20.0);
    double previous = 1e300;
    for (const double eps : {1e-1, 5e-2, 2.5e-2, 1e-3}) {
      const auto plan = planner.plan_with_tables(tables, eps);
      CHECK(plan.objective >= exhaustive.objective - 1e-9);
      CHECK(plan.objective <= exhaustive.objective + eps);
      CHECK(plan.objective <= previous + 1e-12);
      previous = plan.objective;
    }
  }

  TEST_CASE("determinism and widening") {
    Rng rng(65);
    auto gen = random_environment(3, 2, 2, rng);
    const auto st = structure_for(gen);
    ConfidenceState conf(st, 0.1, 0.2);
    for (int k = 0; k < 40; ++k) {
      auto s = gen.env.reset(rng);
      const int a = static_cast<int>(uniform_index(rng, 2));
      const auto out = gen.env.step(s, a, rng);
      conf.record_step(s, a, out.rewards, out.next_state);
    }
    PlannerOptions opt;
    opt.W = 10.0;
    opt.tables.width_scale = 0.02;
    const Planner narrow(st, opt);
    const auto a = narrow.plan(conf, 1e-2);
    const auto b = narrow.plan(conf, 1e-2);
    CHECK(a.w.flat()[0] == b.w.flat()[0]);
    CHECK(std::equal(a.w.flat().begin(), a.w.flat().end(), b.w.flat().begin()));
    opt.tables.width_scale = 0.08;
    const Planner wide(st, opt);
    CHECK(wide.plan(conf, 1e-2).objective >= a.objective - 1e-2);
  }

  TEST_CASE("violating state extraction") {
    Rng rng(66);
    for (int it = 0; it < 20; ++it) {
      RandomStructureSpec spec;
      spec.m = 3 + static_cast<int>(uniform_index(rng, 6));
      const auto st = random_structure(spec, rng);
      const auto tables = random_tables(st, rng);
      const auto w = random_weights(st->tau, st->basis.size(), 1.0, rng);
      const auto sys = generate_constraints(w, 1, 1, tables, choose_order(*st, std::nullopt));
      const auto exact = propagate_small_lp(sys);
      const auto s = extract_violating_state(sys, exact.values, st->space);
      CHECK(bracket_value(w, tables, s, 1, 1) == doctest::Approx(exact.value).epsilon(1e-9));
      CHECK(bracket_hyperplane(w, tables, s, 1, 1).eval(w.flat()) == doctest::Approx(exact.value).epsilon(1e-9));
    }
  }
}
