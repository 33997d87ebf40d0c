#include "fsmdp/oracle_suite.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

#include "fsmdp/instances.hpp"
#include "fsmdp/planner.hpp"
#include "fsmdp/simplex.hpp"
#include "fsmdp/validate.hpp"

namespace fsmdp {

namespace {

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::shared_ptr<const ModelStructure> random_instance(Rng& rng, int max_vars) {
  RandomStructureSpec spec;
  spec.m = 2 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(max_vars - 1)));
  spec.bases = 1 + static_cast<int>(uniform_index(rng, 4));
  spec.rewards = 1 + static_cast<int>(uniform_index(rng, 3));
  return random_structure(spec, rng);
}

double objective_of(std::span<const double> p, std::span<const double> h, Sign s) {
  double v = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) v += p[k] * h[k];
  return s == Sign::NonNegative ? v : -v;
}

}  // namespace

CheckResult check_elimination(int instances, std::uint64_t seed, int max_vars, double tol) {
  Timer timer;
  CheckResult r{"elimination vs brute force", true, 0.0, "", 0.0};
  Rng rng(seed);
  std::size_t systems = 0;
  for (int it = 0; it < instances; ++it) {
    const auto st = random_instance(rng, max_vars);
    const auto tables = random_tables(st, rng);
    const auto w = random_weights(st->tau, st->basis.size(), 1.0, rng);
    const EliminationTemplate tmpl(st, choose_order(*st, std::nullopt));
    for (int l = 1; l <= st->tau; ++l)
      for (int a = 0; a < st->space.action_count(); ++a) {
        const auto sys = tmpl.instantiate(w, l, a, tables);
        const auto [truth, arg] = brute_force_bracket_max(w, tables, a, l);
        const auto lp = propagate_small_lp(sys);
        const auto s = extract_violating_state(sys, lp.values, st->space);
        r.worst = std::max({r.worst, rel_err(lp.value, truth), rel_err(bracket_value(w, tables, s, a, l), truth)});
        ++systems;
      }
  }
  r.pass = r.worst <= tol;
  r.detail = std::to_string(instances) + " instances, " + std::to_string(systems) + " systems, worst " + fmt(r.worst);
  r.seconds = timer.seconds();
  return r;
}

CheckResult check_simplex(int instances, std::uint64_t seed, double tol) {
  Timer timer;
  CheckResult r{"simplex vs propagation", true, 0.0, "", 0.0};
  Rng rng(seed);
  std::size_t pivots = 0;
  try {
    for (int it = 0; it < instances; ++it) {
      const auto st = random_instance(rng, 8);
      const auto tables = random_tables(st, rng);
      const auto w = random_weights(st->tau, st->basis.size(), 1.0, rng);
      const auto sys = generate_constraints(w, 1, 0, tables, choose_order(*st, std::nullopt));
      const auto exact = propagate_small_lp(sys);
      const auto lp = solve_small_lp(sys);
      r.worst = std::max(r.worst, rel_err(lp.value, exact.value));
      pivots += lp.pivots;
    }
    r.pass = r.worst <= tol;
    r.detail = std::to_string(instances) + " systems, " + std::to_string(pivots) + " pivots, worst " + fmt(r.worst);
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = e.what();
  }
  r.seconds = timer.seconds();
  return r;
}

CheckResult check_optimistic_marginal(int instances, std::uint64_t seed, double tol) {
  Timer timer;
  CheckResult r{"optimistic marginal vs vertex enumeration", true, 0.0, "", 0.0};
  Rng rng(seed);
  for (int it = 0; it < instances; ++it) {
    const std::size_t K = 1 + uniform_index(rng, 5);
    Distribution p(K);
    std::vector<double> h(K);
    double total = 0.0;
    for (auto& v : p) total += (v = uniform01(rng));
    for (auto& v : p) v /= total;
    // repeated h values exercise the tie rule
    for (auto& v : h) v = uniform_index(rng, 4) == 0 ? 0.5 : 2.0 * uniform01(rng) - 1.0;
    const double half = uniform_index(rng, 5) == 0 ? 0.0 : uniform01(rng);
    const Sign s = uniform_index(rng, 2) ? Sign::NonNegative : Sign::Negative;
    const auto greedy = optimistic_marginal(h, p, half, s);
    const auto vertex = vertex_enum_transition_opt(p, half, h, s);
    r.worst = std::max(r.worst, std::abs(objective_of(greedy, h, s) - objective_of(vertex, h, s)));
  }
  r.pass = r.worst <= tol;
  r.detail = std::to_string(instances) + " instances, worst " + fmt(r.worst);
  r.seconds = timer.seconds();
  return r;
}

CheckResult check_zero_width_planner(std::uint64_t seed, int bits, double W, double epsilon) {
  Timer timer;
  CheckResult r{"zero-width planner vs exponential LP vs value iteration", true, 0.0, "", 0.0};
  Rng rng(seed);
  auto gen = tabular_environment(bits, 2, 2, rng);
  const auto st = structure_for(gen);
  const auto tables = OptimisticTables::from_model(gen.env.to_model(st));

  const auto vi = tabular_vi(gen.env);
  const double vi_total = std::accumulate(vi.values[0].begin(), vi.values[0].end(), 0.0);
  const auto exhaustive = exhaustive_lp_plan(tables, W);

  PlannerOptions opt;
  opt.W = W;
  const Planner planner(st, opt);
  const auto plan = planner.plan_with_tables(tables, epsilon);

  r.worst = std::max(std::abs(plan.objective - exhaustive.objective), std::abs(plan.objective - vi_total));
  const double lp_vs_vi = std::abs(exhaustive.objective - vi_total);
  r.pass = r.worst <= epsilon && lp_vs_vi <= 1e-7;
  std::ostringstream d;
  d << (1 << bits) << " states: planner " << plan.objective << " (" << to_string(plan.solve.status) << ", "
    << plan.solve.iterations << " iterations), exponential LP " << exhaustive.objective << ", VI " << vi_total;
  r.detail = d.str();
  r.seconds = timer.seconds();
  return r;
}

CheckResult check_oracle_soundness(int instances, int samples, std::uint64_t seed, double tol) {
  Timer timer;
  CheckResult r{"separation oracle soundness", true, 0.0, "", 0.0};
  Rng rng(seed);
  std::size_t feasible = 0, lp_cuts = 0, norm_cuts = 0;
  std::string failure;
  for (int it = 0; it < instances && failure.empty(); ++it) {
    const auto st = random_instance(rng, 10);
    const auto tables = random_tables(st, rng);
    const int tau = st->tau;
    const std::size_t phi = st->basis.size();

    // A strictly feasible point using h_0 alone: the rewards are at most 1 each.
    const double rmax = static_cast<double>(st->reward_count());
    WeightMatrix base(tau, phi, 0.0);
    for (int l = 1; l <= tau; ++l) base.set(l, 0, (tau - l + 1) * rmax + 1.0);
    const double noise = 0.5 / static_cast<double>(phi);
    const double W = (tau * rmax + 1.0) + 1.0;
    WeightMatrix shape(tau, phi, W);

    std::vector<WeightMatrix> pool;
    for (int tries = 0; static_cast<int>(pool.size()) < samples && tries < 20 * samples; ++tries) {
      WeightMatrix x(tau, phi, W, std::vector<double>(base.flat().begin(), base.flat().end()));
      for (auto& v : x.flat()) v += noise * (2.0 * uniform01(rng) - 1.0);
      bool in_box = true;
      for (int l = 1; l <= tau; ++l) in_box = in_box && x.l1_norm(l) <= W;
      if (in_box && exhaustive_max_violation(x, tables) <= 0.0) pool.push_back(std::move(x));
    }

    const EliminationTemplate tmpl(st, choose_order(*st, std::nullopt));
    SeparationOracle oracle(tables, tmpl, W);
    for (int q = 0; q < 10; ++q) {
      WeightMatrix w(tau, phi, W, std::vector<double>(base.flat().begin(), base.flat().end()));
      const double scale = q < 5 ? 4.0 * noise * q : 3.0;
      for (auto& v : w.flat()) v = (q < 5 ? v : 0.0) + scale * (2.0 * uniform01(rng) - 1.0);
      const auto verdict = oracle(w);
      if (verdict.feasible) {
        ++feasible;
        const double viol = exhaustive_max_violation(w, tables);
        r.worst = std::max(r.worst, viol);
        if (viol > tol) failure = "feasible verdict with exhaustive violation " + fmt(viol);
        continue;
      }
      ++(verdict.norm_cut ? norm_cuts : lp_cuts);
      if (!(verdict.cut.eval(w.flat()) > 0.0)) failure = "cut does not exclude the query";
      for (const auto& x : pool) {
        const double hv = verdict.cut.eval(x.flat());
        r.worst = std::max(r.worst, hv);
        if (hv > tol) failure = "cut excludes a feasible point by " + fmt(hv);
      }
    }
  }
  r.pass = failure.empty();
  r.detail = failure.empty() ? std::to_string(feasible) + " feasible, " + std::to_string(lp_cuts) + " LP cuts, " +
                                   std::to_string(norm_cuts) + " norm cuts; worst " + fmt(r.worst)
                             : failure;
  r.seconds = timer.seconds();
  return r;
}

CheckResult check_objective(int instances, std::uint64_t seed, double tol) {
  Timer timer;
  CheckResult r{"objective closed form vs state summation", true, 0.0, "", 0.0};
  Rng rng(seed);
  for (int it = 0; it < instances; ++it) {
    const auto st = random_instance(rng, 10);
    const auto w = random_weights(st->tau, st->basis.size(), 1.0, rng);
    const double naive = naive_objective(w, st->space, st->basis);
    const double closed = evaluate_objective(w, st->space, st->basis);
    const auto c = objective_coefficients(*st);
    const double dot = std::inner_product(c.begin(), c.end(), w.flat().begin(), 0.0);
    r.worst = std::max({r.worst, rel_err(closed, naive), rel_err(dot, naive)});
  }
  r.pass = r.worst <= tol;
  r.detail = std::to_string(instances) + " instances, worst " + fmt(r.worst);
  r.seconds = timer.seconds();
  return r;
}

void print_check(std::ostream& out, const CheckResult& r) {
  char t[32];
  std::snprintf(t, sizeof t, "%.2fs", r.seconds);
  out << (r.pass ? "PASS" : "FAIL") << "  " << r.name << ": " << r.detail << " [" << t << "]\n";
}

std::vector<CheckResult> run_oracle_suite(std::uint64_t seed, std::ostream& out) {
  std::vector<CheckResult> all;
  auto run = [&](CheckResult r) {
    print_check(out, r);
    all.push_back(std::move(r));
  };
  run(check_elimination(50, seed, 8));
  run(check_simplex(20, seed + 1));
  run(check_optimistic_marginal(100, seed + 2));
  run(check_zero_width_planner(seed + 3, 2));
  run(check_oracle_soundness(5, 200, seed + 4));
  run(check_objective(20, seed + 5));
  return all;
}

}  // namespace fsmdp
