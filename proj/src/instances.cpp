#include "fsmdp/instances.hpp"

#include <algorithm>
#include <numeric>

#include "fsmdp/estimation.hpp"

namespace fsmdp {

namespace {

Scope random_scope(int m, int size, Rng& rng) {
  std::vector<int> vars(static_cast<std::size_t>(m));
  std::iota(vars.begin(), vars.end(), 0);
  for (int k = 0; k < size; ++k) {
    const auto pick = k + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(m - k)));
    std::swap(vars[k], vars[pick]);
  }
  vars.resize(static_cast<std::size_t>(size));
  return Scope::from_unsorted(vars);
}

std::vector<double> random_distribution(std::size_t k, Rng& rng) {
  std::vector<double> p(k);
  double s = 0.0;
  for (auto& v : p) s += (v = uniform01(rng) + 1e-3);
  for (auto& v : p) v /= s;
  return p;
}

}  // namespace

std::shared_ptr<const ModelStructure> random_structure(const RandomStructureSpec& spec, Rng& rng) {
  FactoredSpace space(std::vector<int>(static_cast<std::size_t>(spec.m), 2), spec.actions);
  const int cap = std::min(spec.max_scope, spec.m);
  std::vector<Scope> rewards;
  for (int i = 0; i < spec.rewards; ++i)
    rewards.push_back(random_scope(spec.m, 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(cap))), rng));
  std::vector<BasisFunction> fns;
  for (int j = 0; j < spec.bases; ++j) {
    const int vs = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(std::min(2, cap))));
    const int ps = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(cap)));
    BasisFunction f{random_scope(spec.m, vs, rng), random_scope(spec.m, ps, rng), {}};
    f.table.resize(std::size_t{1} << f.value_scope.size());
    for (auto& v : f.table) v = 2.0 * uniform01(rng) - 1.0;
    fns.push_back(std::move(f));
  }
  return std::make_shared<const ModelStructure>(space, spec.tau, std::move(rewards), Basis(space, std::move(fns), 1.0));
}

OptimisticTables random_tables(std::shared_ptr<const ModelStructure> structure, Rng& rng, int steps) {
  const auto& st = *structure;
  ConfidenceState conf(structure, 0.1, 0.3);
  conf.begin_episode(1 + uniform_index(rng, 20));
  State s(st.space.var_count()), t(st.space.var_count());
  std::vector<double> r(st.reward_count());
  for (int k = 0; k < steps; ++k) {
    for (std::size_t v = 0; v < s.size(); ++v) {
      s[v] = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(st.space.card(v))));
      t[v] = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(st.space.card(v))));
    }
    for (auto& x : r) x = uniform01(rng);
    conf.record_step(s, static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(st.space.action_count()))), r, t);
  }
  TableOptions opt;
  opt.C = 1.0;
  opt.width_scale = 0.05;
  return OptimisticTables::build(conf, opt);
}

WeightMatrix random_weights(int tau, std::size_t phi, double scale, Rng& rng) {
  WeightMatrix w(tau, phi, scale * static_cast<double>(phi));
  for (auto& v : w.flat()) v = scale * (2.0 * uniform01(rng) - 1.0);
  return w;
}

std::shared_ptr<const ModelStructure> structure_for(const GeneratedEnvironment& gen) {
  const auto& env = gen.env;
  return std::make_shared<const ModelStructure>(env.space(), env.tau(), env.reward_scopes(),
                                                Basis(env.space(), gen.basis, gen.G));
}

GeneratedEnvironment random_environment(int m, int actions, int tau, Rng& rng) {
  FactoredSpace space(std::vector<int>(static_cast<std::size_t>(m), 2), actions);
  ProductTransition prod;
  std::vector<RewardComponentSpec> rewards;
  std::vector<BasisFunction> basis;
  for (int v = 0; v < m;) {
    const int size = (v + 1 < m && uniform_index(rng, 2) == 0) ? 2 : 1;
    std::vector<int> vars;
    for (int k = 0; k < size; ++k) vars.push_back(v + k);
    v += size;
    Cluster cl;
    cl.scope = Scope(vars);
    std::vector<int> pa = vars;
    if (m > size && uniform_index(rng, 2) == 0) {
      int extra = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(m)));
      pa.push_back(extra);
    }
    cl.parents = Scope::from_unsorted(pa);
    const std::size_t K = std::size_t{1} << cl.scope.size();
    const std::size_t P = std::size_t{1} << cl.parents.size();
    for (std::size_t c = 0; c < static_cast<std::size_t>(actions) * P; ++c) {
      const auto d = random_distribution(K, rng);
      cl.table.insert(cl.table.end(), d.begin(), d.end());
    }
    RewardComponentSpec r{cl.scope, {}, 0.2, 0.0, 1.0};
    r.mean.resize(static_cast<std::size_t>(actions) * K);
    for (auto& x : r.mean) x = uniform01(rng);
    BasisFunction h{cl.scope, cl.parents, {}};
    h.table.resize(K);
    for (auto& x : h.table) x = uniform01(rng);
    prod.clusters.push_back(std::move(cl));
    rewards.push_back(std::move(r));
    basis.push_back(std::move(h));
  }
  Environment env(space, std::move(rewards), JointTransitionSpec::product(std::move(prod)), {}, tau);
  return {std::move(env), std::move(basis), 1.0};
}

GeneratedEnvironment tabular_environment(int bits, int actions, int tau, Rng& rng) {
  FactoredSpace space(std::vector<int>(static_cast<std::size_t>(bits), 2), actions);
  const std::size_t n = std::size_t{1} << bits;
  Cluster cl;
  cl.scope = Scope::full(static_cast<std::size_t>(bits));
  cl.parents = cl.scope;
  for (std::size_t c = 0; c < static_cast<std::size_t>(actions) * n; ++c) {
    const auto d = random_distribution(n, rng);
    cl.table.insert(cl.table.end(), d.begin(), d.end());
  }
  RewardComponentSpec r{cl.scope, {}, 0.1, 0.0, 1.0};
  r.mean.resize(static_cast<std::size_t>(actions) * n);
  for (auto& x : r.mean) x = uniform01(rng);
  std::vector<BasisFunction> basis;
  for (std::size_t k = 1; k < n; ++k) {
    BasisFunction h{cl.scope, cl.scope, std::vector<double>(n, 0.0)};
    h.table[k] = 1.0;
    basis.push_back(std::move(h));
  }
  Environment env(space, {std::move(r)}, JointTransitionSpec::product({{std::move(cl)}}), {}, tau);
  return {std::move(env), std::move(basis), 1.0};
}

}  // namespace fsmdp
