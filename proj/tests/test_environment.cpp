#include <doctest.h>

#include <array>
#include <cmath>

#include "fsmdp/environment.hpp"
#include "fsmdp/instances.hpp"
#include "fsmdp/validate.hpp"

using namespace fsmdp;

namespace {

// Two binary variables in one cluster, mixed with a component of two singleton clusters.
Environment mixture_env() {
  const FactoredSpace space({2, 2}, 1);
  Cluster joint{Scope{0, 1}, Scope{0, 1}, {}, {}};
  for (int z = 0; z < 4; ++z) joint.table.insert(joint.table.end(), {0.1, 0.2 + 0.05 * z, 0.3, 0.4 - 0.05 * z});
  // the second component must share cluster scopes, so it uses one joint cluster too
  Cluster flat{Scope{0, 1}, Scope{0}, {}, {}};
  flat.table = {0.25, 0.25, 0.25, 0.25, 0.7, 0.1, 0.1, 0.1};
  JointTransitionSpec spec;
  spec.form = JointTransitionSpec::Form::Mixture;
  spec.weights = {0.3, 0.7};
  spec.components = {{{joint}}, {{flat}}};
  return Environment(space, {{Scope{0}, {0.0, 1.0}, 0.0, 0.0, 1.0}}, spec, {}, 2);
}

}  // namespace

TEST_SUITE("env-sim") {
  TEST_CASE("reset") {
    const FactoredSpace space({2, 2, 2}, 1);
    InitialDistribution point;
    point.kind = InitialDistribution::Kind::Point;
    point.point = {1, 0, 1};
    const Environment fixed(space, {}, JointTransitionSpec::product({{{Scope::full(3), Scope{}, {}, {5}}}}), point, 1);
    CHECK(fixed.reset(1) == State{1, 0, 1});
    CHECK(fixed.reset(99) == State{1, 0, 1});

    const Environment uni(space, {}, JointTransitionSpec::product({{{Scope::full(3), Scope{}, {}, {0}}}}), {}, 1);
    CHECK(uni.reset(7) == uni.reset(7));
    Rng rng(11);
    std::array<int, 8> counts{};
    const int n = 100000;
    for (int k = 0; k < n; ++k) ++counts[rank(Scope::full(3), uni.reset(rng), space)];
    double chi2 = 0.0;
    for (const int c : counts) {
      CHECK(std::abs(c / double(n) - 0.125) <= 0.01);
      chi2 += (c - n / 8.0) * (c - n / 8.0) / (n / 8.0);
    }
    CHECK(chi2 < 24.3);  // 0.999 quantile, 7 degrees of freedom
  }

  TEST_CASE("deterministic successors and noiseless rewards") {
    const auto gen = make_safe_action_family(4, 5);
    Rng rng(1);
    for (std::uint32_t i = 0; i < 16; ++i) {
      const auto s = unrank(Scope::full(4), i, gen.env.space());
      const auto a0 = gen.env.step(s, 0, rng);
      CHECK(a0.rewards[0] == 0.0);
      CHECK(rank(Scope::full(4), a0.next_state, gen.env.space()) == gen.env.transition().components[0].clusters[0].successor[0]);
      const auto a1 = gen.env.step(s, 1, rng);
      CHECK((a1.rewards[0] == -1.0 || a1.rewards[0] == -0.5));
      CHECK(a1.rewards[0] == gen.env.expected_reward(s, 1));
    }
  }

  TEST_CASE("marginalization") {
    Rng rng(2);
    auto gen = random_environment(4, 2, 2, rng);
    const auto& cl = gen.env.transition().components[0].clusters[0];
    const auto pa = enumerate_assignments(cl.parents, gen.env.space());
    const std::size_t K = value_count(cl.scope, gen.env.space());
    for (std::size_t z = 0; z < pa.size(); ++z) {
      const auto d = gen.env.marginalize(cl.scope, cl.parents, pa[z].values, 1);
      for (std::size_t o = 0; o < K; ++o) CHECK(d[o] == cl.table[(pa.size() + z) * K + o]);
    }

    // 0.3 m1 + 0.7 m2 worked by hand for the first variable
    const auto env = mixture_env();
    for (int x0 = 0; x0 < 2; ++x0)
      for (int x1 = 0; x1 < 2; ++x1) {
        const State s{x0, x1};
        const auto row = env.transition_row(s, 0);
        const auto m = env.marginalize(Scope{0, 1}, Scope{0, 1}, s, 0);
        for (std::size_t o = 0; o < 4; ++o) CHECK(m[o] == doctest::Approx(row[o]).epsilon(1e-12));
        const double m1 = 0.1 + 0.3, m2 = x0 == 0 ? 0.5 : 0.8;
        CHECK(m[0] + m[2] == doctest::Approx(0.3 * m1 + 0.7 * m2).epsilon(1e-12));
      }

    // Monte Carlo against the exact marginal
    Rng mc(9);
    const State s{1, 0};
    std::array<double, 4> freq{};
    const int n = 100000;
    for (int k = 0; k < n; ++k) freq[rank(Scope{0, 1}, env.step(s, 0, mc).next_state, env.space())] += 1.0 / n;
    const auto exact = env.marginalize(Scope{0, 1}, Scope{0, 1}, s, 0);
    double l1 = 0.0;
    for (std::size_t o = 0; o < 4; ++o) l1 += std::abs(freq[o] - exact[o]);
    CHECK(l1 <= 0.01);
  }

  TEST_CASE("mixture marginals against the full joint") {
    Rng rng(4);
    const auto gen = random_environment(6, 2, 1, rng);
    const auto& space = gen.env.space();
    StateCursor cur(space);
    do {
      for (int a = 0; a < 2; ++a) {
        const auto row = gen.env.transition_row(cur.state(), a);
        for (const auto& cl : gen.env.transition().components[0].clusters) {
          const auto pa = project(cur.state(), cl.parents).values;
          const auto d = gen.env.marginalize(cl.scope, cl.parents, pa, a);
          std::vector<double> brute(d.size(), 0.0);
          StateCursor nx(space);
          std::size_t r = 0;
          do brute[rank(cl.scope, project(nx.state(), cl.scope).values, space)] += row[r++];
          while (nx.next());
          for (std::size_t o = 0; o < d.size(); ++o) CHECK(d[o] == doctest::Approx(brute[o]).epsilon(1e-12));
        }
      }
    } while (cur.next());
  }

  TEST_CASE("safe-action family") {
    for (const std::uint64_t seed : {1u, 2u, 3u}) {
      const auto gen = make_safe_action_family(5, seed);
      const auto vi = tabular_vi(gen.env);
      for (const double v : vi.values[0]) CHECK(v == 0.0);
      const auto opt = gen.env.transition().components[0].clusters[0].successor[0];
      StateCursor cur(gen.env.space());
      do {
        const auto row = gen.env.transition_row(cur.state(), 0);
        CHECK(row[opt] == 1.0);
        const double r = gen.env.expected_reward(cur.state(), 1);
        CHECK((r == -1.0 || r == -0.5));
      } while (cur.next());
    }
  }

  TEST_CASE("two-state environment") {
    TwoStateParams p;
    p.tau = 3;
    const auto gen = make_two_state_env(p);
    CHECK(gen.env.space().joint_size() == 2u);
    const auto mdp = tabulate(gen.env);
    const auto vi = tabular_vi(mdp);
    for (int l = 1; l <= 4; ++l) {
      CHECK(vi.at(l, 0) == 0.0);
      CHECK(vi.at(l, 1) == 0.0);
    }
    // always risky, worked by hand
    const auto risky = policy_evaluation(mdp, std::vector<int>(6, 0));
    CHECK(risky.at(3, 0) == doctest::Approx(-1.0));
    CHECK(risky.at(2, 0) == doctest::Approx(-1.4));
    CHECK(risky.at(2, 1) == doctest::Approx(-0.2));
    CHECK(risky.at(1, 0) == doctest::Approx(-1.68));
    CHECK(risky.at(1, 1) == doctest::Approx(-0.44));
  }

  TEST_CASE("invalid environments") {
    const FactoredSpace space({2}, 1);
    CHECK_THROWS_AS(Environment(space, {{Scope{0}, {0.5}, 0.0, 0.0, 1.0}},
                                JointTransitionSpec::product({{{Scope{0}, Scope{0}, {}, {0, 1}}}}), {}, 1),
                    ConfigError);
    CHECK_THROWS_AS(Environment(space, {}, JointTransitionSpec::product({{{Scope{0}, Scope{0}, {0.5, 0.2, 1, 0}, {}}}}), {}, 1),
                    ConfigError);
  }
}
