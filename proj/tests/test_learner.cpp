#include <doctest.h>

#include <cmath>

#include "fsmdp/instances.hpp"
#include "fsmdp/learner.hpp"
#include "fsmdp/validate.hpp"

using namespace fsmdp;

namespace {

LearnerOptions two_state_options() {
  LearnerOptions o;
  o.sigma = 0.5;
  o.planner.W = 4.0;
  o.planner.tables.C = 0.0;
  return o;
}

}  // namespace

TEST_SUITE("learner") {
  TEST_CASE("greedy action") {
    const FactoredSpace space({2}, 1);
    const auto st = std::make_shared<const ModelStructure>(space, 1, std::vector<Scope>{Scope{0}}, Basis(space, {}, 1.0));
    FsmdpModel m{st, {{0.2, 0.4}}, {{}}};
    const auto tables = OptimisticTables::from_model(m);
    CHECK(greedy_action(WeightMatrix(1, 1, 1.0), tables, State{1}, 1) == 0);

    for (const int mm : {3, 5}) {
      const auto gen = make_safe_action_family(mm, 4);
      const auto sst = structure_for(gen);
      const auto t = OptimisticTables::from_model(gen.env.to_model(sst));
      const WeightMatrix zero(1, sst->basis.size(), 1.0);
      StateCursor cur(sst->space);
      do CHECK(greedy_action(zero, t, cur.state(), 1) == 0);
      while (cur.next());
    }
  }

  TEST_CASE("greedy policy with exact tabular weights") {
    Rng rng(71);
    auto gen = tabular_environment(2, 3, 2, rng);
    const auto st = structure_for(gen);
    const auto tables = OptimisticTables::from_model(gen.env.to_model(st));
    const auto mdp = tabulate(gen.env);
    const auto vi = tabular_vi(mdp);
    WeightMatrix w(2, 4, 50.0);
    for (int l = 1; l <= 2; ++l) {
      w.set(l, 0, vi.at(l, 0));
      for (std::size_t k = 1; k < 4; ++k) w.set(l, k, vi.at(l, k) - vi.at(l, 0));
    }
    StateCursor cur(st->space);
    std::size_t s = 0;
    do {
      for (int l = 1; l <= 2; ++l) {
        const int a = greedy_action(w, tables, cur.state(), l);
        double q = mdp.reward[s * 3 + a];
        for (std::size_t t = 0; t < 4; ++t) q += mdp.transition[(s * 3 + a) * 4 + t] * vi.at(l + 1, t);
        CHECK(q == doctest::Approx(vi.at(l, s)).epsilon(1e-12));
      }
      ++s;
    } while (cur.next());
  }

  TEST_CASE("episodes") {
    const auto gen = make_safe_action_family(3, 2);
    const auto st = structure_for(gen);
    const auto tables = OptimisticTables::from_model(gen.env.to_model(st));
    ConfidenceState conf(st, 0.1, 0.0);
    Rng rng(1);
    const auto t = run_episode(gen.env, WeightMatrix(1, st->basis.size(), 1.0), tables, conf, rng);
    CHECK(conf.transitions() == 1);
    CHECK(t.actions.size() == 1);

    // point start, deterministic dynamics: the same trajectory for every seed
    InitialDistribution point;
    point.kind = InitialDistribution::Kind::Point;
    point.point = {1, 0, 1};
    const Environment det(gen.env.space(), gen.env.rewards(), gen.env.transition(), point, 4);
    const auto dst = structure_for({det, gen.basis, gen.G});
    const auto dt = OptimisticTables::from_model(det.to_model(dst));
    WeightMatrix w(4, dst->basis.size(), 1.0);
    std::vector<Trajectory> runs;
    for (const std::uint64_t seed : {1u, 2u, 3u}) {
      ConfidenceState c(dst, 0.1, 0.0);
      Rng r(seed);
      runs.push_back(run_episode(det, w, dt, c, r));
      CHECK(runs.back().actions.size() == 4);
      CHECK(c.transitions() == 4);
    }
    CHECK(runs[0].states == runs[1].states);
    CHECK(runs[1].states == runs[2].states);
    CHECK(runs[0].actions == runs[2].actions);
  }

  TEST_CASE("single episode run") {
    const auto gen = make_two_state_env();
    Learner learner(gen.env, structure_for(gen), two_state_options(), 3);
    const auto trace = learner.run(1);
    REQUIRE(trace.rows.size() == 1);
    CHECK(trace.rows[0].k == 1);
    CHECK(trace.rows[0].optimal_value.has_value());
    CHECK(!trace.rows[0].proxy);
    CHECK(trace.rows[0].epsilon == 1.0);
    CHECK_THROWS_AS(Learner(gen.env, structure_for(gen), two_state_options(), 3).run(0), ConfigError);
  }

  TEST_CASE("regret bound formula") {
    const double T = 100, J = 2, N = 8, zeta = 1, delta = 0.1;
    const double by_hand = 2.0 * 30.0 * 2.0 * 1.0 * 1.0 *
                           std::sqrt(T * J * (J * std::log(2.0) + std::log(2.0 * N * zeta * T * T / delta)));
    CHECK(theoretical_bound(2, 2, 1, 1, T, J, N, zeta, delta) == doctest::Approx(by_hand).epsilon(1e-12));
    const double b1 = theoretical_bound(2, 2, 1, 1, 1000, J, N, zeta, delta);
    const double b2 = theoretical_bound(2, 2, 1, 1, 2000, J, N, zeta, delta);
    CHECK(b2 > std::sqrt(2.0) * b1);
    CHECK(b2 < 2.0 * b1);
    CHECK(theoretical_bound(2, 2, 1, 1, T, J, N, zeta, 0.01) > theoretical_bound(2, 2, 1, 1, T, J, N, zeta, 0.1));
    CHECK_THROWS_AS(theoretical_bound(2, 2, 0.5, 1, T, J, N, zeta, delta), ConfigError);
  }

  TEST_CASE("resume from a snapshot") {
    const auto gen = make_two_state_env();
    const auto st = structure_for(gen);
    Learner whole(gen.env, st, two_state_options(), 17);
    const auto all = whole.run(40);

    Learner first(gen.env, st, two_state_options(), 17);
    first.run(15);
    const auto snap = first.snapshot();
    Learner second(gen.env, st, two_state_options(), 99);
    second.restore(nlohmann::json::parse(snap.dump()));
    const auto rest = second.run(40);
    REQUIRE(rest.rows.size() == 25);
    for (std::size_t k = 0; k < 25; ++k) {
      CHECK(rest.rows[k].k == all.rows[15 + k].k);
      CHECK(rest.rows[k].realized_reward == all.rows[15 + k].realized_reward);
      CHECK(rest.rows[k].cumulative_regret == all.rows[15 + k].cumulative_regret);
    }
  }

  TEST_CASE("proxy regret beyond the exact limit") {
    const auto gen = make_two_state_env();
    auto opt = two_state_options();
    opt.exact_limit = 1;
    Learner learner(gen.env, structure_for(gen), opt, 5);
    const auto trace = learner.run(5);
    CHECK(!learner.exact());
    for (const auto& r : trace.rows) CHECK(r.proxy);
  }
}
