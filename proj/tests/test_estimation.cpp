#include <doctest.h>

#include <cmath>
#include <map>
#include <tuple>

#include "fsmdp/estimation.hpp"
#include "fsmdp/instances.hpp"
#include "fsmdp/learner.hpp"

using namespace fsmdp;

namespace {

std::shared_ptr<const ModelStructure> two_state_structure() { return structure_for(make_two_state_env()); }

}  // namespace

TEST_SUITE("estimation") {
  TEST_CASE("record and count") {
    ConfidenceState conf(two_state_structure(), 0.1, 0.5);
    const std::vector<double> r{-1.0};
    CHECK(!conf.empirical_marginal(1, 0, 0).has_value());
    CHECK(!conf.empirical_reward(0, 0, 0).has_value());
    conf.record_step(State{0}, 0, r, State{1});
    CHECK(conf.reward_count(0, 0, 0) == 1);
    CHECK(conf.marginal_visits(1, 0, 0) == 1);
    CHECK(conf.outcome_count(1, 0, 0, 1) == 1);
    CHECK(conf.transitions() == 1);
    for (int k = 0; k < 4; ++k) conf.record_step(State{0}, 0, r, State{1});
    const auto p = conf.empirical_marginal(1, 0, 0);
    REQUIRE(p.has_value());
    CHECK((*p)[0] == 0.0);
    CHECK((*p)[1] == 1.0);
    ConfidenceState c2(two_state_structure(), 0.1, 0.5);
    for (const int next : {0, 0, 0, 1}) c2.record_step(State{1}, 1, std::vector<double>{0.0}, State{next});
    const auto q = c2.empirical_marginal(1, 1, 1);
    CHECK((*q)[0] == doctest::Approx(0.75));
    CHECK((*q)[1] == doctest::Approx(0.25));
  }

  TEST_CASE("interleaved parents stay disjoint") {
    Rng rng(5);
    auto gen = random_environment(4, 2, 2, rng);
    const auto st = structure_for(gen);
    ConfidenceState conf(st, 0.1, 0.2);
    std::map<std::tuple<std::size_t, std::size_t, int, std::size_t>, std::uint64_t> log;
    for (int k = 0; k < 500; ++k) {
      const auto s = gen.env.reset(rng);
      const int a = static_cast<int>(uniform_index(rng, 2));
      const auto out = gen.env.step(s, a, rng);
      conf.record_step(s, a, out.rewards, out.next_state);
      for (std::size_t j = 1; j < st->basis.size(); ++j)
        ++log[{j, st->basis.parent_indexer(j).rank_of_state(s), a, st->basis.value_indexer(j).rank_of_state(out.next_state)}];
    }
    for (std::size_t j = 1; j < st->basis.size(); ++j)
      for (int a = 0; a < 2; ++a)
        for (std::size_t z = 0; z < st->parent_count(j); ++z)
          for (std::size_t o = 0; o < st->outcome_count(j); ++o) {
            const auto it = log.find({j, z, a, o});
            CHECK(conf.outcome_count(j, z, a, o) == (it == log.end() ? 0 : it->second));
          }
  }

  TEST_CASE("empirical marginal converges") {
    Rng rng(8);
    auto gen = random_environment(3, 1, 1, rng);
    const auto st = structure_for(gen);
    ConfidenceState conf(st, 0.1, 0.2);
    const State s{0, 1, 0};
    for (int k = 0; k < 10000; ++k) {
      const auto out = gen.env.step(s, 0, rng);
      conf.record_step(s, 0, out.rewards, out.next_state);
    }
    for (std::size_t j = 1; j < st->basis.size(); ++j) {
      const auto& f = st->basis[j];
      const auto z = st->basis.parent_indexer(j).rank_of_state(s);
      const auto emp = *conf.empirical_marginal(j, z, 0);
      const auto exact = gen.env.marginalize(f.value_scope, f.parent_scope, project(s, f.parent_scope).values, 0);
      double l1 = 0.0;
      for (std::size_t o = 0; o < emp.size(); ++o) l1 += std::abs(emp[o] - exact[o]);
      CHECK(l1 <= 0.05);
    }
  }

  TEST_CASE("width schedules") {
    CHECK(reward_width(1.0, 1, 2, 1, 0.1) == doctest::Approx(4.0 * std::log(80.0)));
    CHECK(reward_width(1.0, 1, 2, 1, 0.1) == doctest::Approx(17.529).epsilon(1e-4));
    CHECK(reward_width(0.0, 3, 8, 10, 0.1) == 0.0);
    for (std::uint64_t k = 1; k < 50; ++k) {
      CHECK(marginal_width(4, 8, 2, k + 1, 0.1) > marginal_width(4, 8, 2, k, 0.1));
      CHECK(reward_width(0.5, 2, 4, k + 1, 0.1) >= reward_width(0.5, 2, 4, k, 0.1));
    }
    const double expect = 2.0 * 3.0 * std::log(2.0) - 2.0 * std::log(0.05 / (2.0 * 10.0 * 4.0 * 9.0));
    CHECK(marginal_width(3, 10, 4, 3, 0.05) == doctest::Approx(expect).epsilon(1e-12));
  }

  TEST_CASE("model membership") {
    const auto gen = make_two_state_env();
    const auto st = structure_for(gen);
    ConfidenceState conf(st, 0.1, 0.5);
    const auto truth = gen.env.to_model(st);
    CHECK(conf.contains_model(truth));
    auto wild = truth;
    wild.reward_means[0][0] = 50.0;
    CHECK(conf.contains_model(wild));

    Rng rng(3);
    for (int k = 0; k < 200; ++k) {
      const auto s = gen.env.reset(rng);
      const int a = static_cast<int>(uniform_index(rng, 2));
      const auto out = gen.env.step(s, a, rng);
      conf.record_step(s, a, out.rewards, out.next_state);
    }
    CHECK(conf.contains_model(conf.empirical_model()));
    CHECK(!conf.contains_model(wild));
  }

  TEST_CASE("snapshot round trip") {
    const auto st = two_state_structure();
    ConfidenceState conf(st, 0.1, 0.5);
    conf.begin_episode(4);
    conf.record_step(State{0}, 1, std::vector<double>{-0.25}, State{1});
    const auto back = ConfidenceState::from_json(st, conf.to_json());
    CHECK(back.to_json() == conf.to_json());
    CHECK(back.episode() == 4);
  }

  TEST_CASE("counts after K episodes") {
    const auto gen = make_two_state_env();
    LearnerOptions opt;
    opt.planner.W = 4.0;
    opt.sigma = 0.5;
    opt.planner.tables.C = 0.0;
    Learner learner(gen.env, structure_for(gen), opt, 2);
    learner.run(30);
    CHECK(learner.confidence().transitions() == 30u * 2u);
  }
}
