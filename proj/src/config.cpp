#include "fsmdp/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "fsmdp/instances.hpp"

namespace fsmdp {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError("config field '" + field + "': " + what);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail(path.empty() ? key : path + "." + key, "required field missing");
  return *it;
}

template <class T>
T as(const json& v, const std::string& path) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    if constexpr (std::is_same_v<T, std::string>) fail(path, "expected a string");
    if constexpr (std::is_arithmetic_v<T>) fail(path, "expected a number");
    fail(path, "has the wrong type");
  }
}

template <class T>
T get_or(const json& obj, const std::string& key, T fallback, const std::string& path = "") {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  return as<T>(*it, path.empty() ? key : path + "." + key);
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& path) {
  for (const auto& [k, v] : obj.items())
    if (std::find_if(known.begin(), known.end(), [&](const char* s) { return k == s; }) == known.end())
      fail(path.empty() ? k : path + "." + k, "unknown field");
}

Scope scope_at(const json& v, const std::string& path) {
  try {
    return Scope(as<std::vector<int>>(v, path));
  } catch (const ConfigError& e) {
    if (std::string(e.what()).rfind("config field", 0) == 0) throw;
    fail(path, e.what());
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) + ": parse error: " +
                      e.what());
  }
}

std::vector<Cluster> clusters_from(const json& arr, const std::string& path) {
  if (!arr.is_array() || arr.empty()) fail(path, "expected a nonempty array of clusters");
  std::vector<Cluster> out;
  for (std::size_t c = 0; c < arr.size(); ++c) {
    const std::string p = path + "[" + std::to_string(c) + "]";
    reject_unknown(arr[c], {"scope", "parents", "table", "successor"}, p);
    Cluster cl;
    cl.scope = scope_at(require(arr[c], "scope", p), p + ".scope");
    cl.parents = scope_at(require(arr[c], "parents", p), p + ".parents");
    if (arr[c].contains("table")) cl.table = as<std::vector<double>>(arr[c]["table"], p + ".table");
    if (arr[c].contains("successor"))
      cl.successor = as<std::vector<std::uint32_t>>(arr[c]["successor"], p + ".successor");
    if (cl.table.empty() == cl.successor.empty()) fail(p, "give exactly one of 'table' or 'successor'");
    out.push_back(std::move(cl));
  }
  return out;
}

std::vector<BasisFunction> basis_from(const json& b, double& G) {
  reject_unknown(b, {"G", "functions"}, "basis");
  G = as<double>(require(b, "G", "basis"), "basis.G");
  const auto& fns = require(b, "functions", "basis");
  if (!fns.is_array()) fail("basis.functions", "expected an array");
  std::vector<BasisFunction> out;
  for (std::size_t j = 0; j < fns.size(); ++j) {
    const std::string p = "basis.functions[" + std::to_string(j) + "]";
    reject_unknown(fns[j], {"value_scope", "parent_scope", "table"}, p);
    out.push_back({scope_at(require(fns[j], "value_scope", p), p + ".value_scope"),
                   scope_at(require(fns[j], "parent_scope", p), p + ".parent_scope"),
                   as<std::vector<double>>(require(fns[j], "table", p), p + ".table")});
  }
  return out;
}

GeneratedEnvironment generate(const json& spec) {
  const std::string name = as<std::string>(spec["generator"], "environment.generator");
  const json params = spec.value("params", json::object());
  const std::string p = "environment.params";
  if (name == "two-state") {
    reject_unknown(params, {"sigma", "tau", "risky_escape", "safe_escape", "relapse"}, p);
    TwoStateParams tp;
    tp.sigma = get_or(params, "sigma", tp.sigma, p);
    tp.tau = get_or(params, "tau", tp.tau, p);
    tp.risky_escape = get_or(params, "risky_escape", tp.risky_escape, p);
    tp.safe_escape = get_or(params, "safe_escape", tp.safe_escape, p);
    tp.relapse = get_or(params, "relapse", tp.relapse, p);
    return make_two_state_env(tp);
  }
  if (name == "safe-action-family") {
    reject_unknown(params, {"m", "seed"}, p);
    return make_safe_action_family(get_or(params, "m", 4, p), get_or<std::uint64_t>(params, "seed", 0, p));
  }
  if (name == "random" || name == "tabular") {
    reject_unknown(params, {"m", "bits", "actions", "tau", "seed"}, p);
    Rng rng(get_or<std::uint64_t>(params, "seed", 0, p));
    const int actions = get_or(params, "actions", 2, p);
    const int tau = get_or(params, "tau", 2, p);
    if (name == "random") return random_environment(get_or(params, "m", 3, p), actions, tau, rng);
    return tabular_environment(get_or(params, "bits", 3, p), actions, tau, rng);
  }
  fail("environment.generator", "unknown generator '" + name + "' (known: two-state, safe-action-family, random, tabular)");
}

Environment environment_from(const json& e) {
  const std::string p = "environment";
  reject_unknown(e, {"cards", "actions", "tau", "rewards", "transition", "rho"}, p);
  FactoredSpace space(as<std::vector<int>>(require(e, "cards", p), p + ".cards"),
                      as<int>(require(e, "actions", p), p + ".actions"));
  const int tau = as<int>(require(e, "tau", p), p + ".tau");

  std::vector<RewardComponentSpec> rewards;
  const auto& rs = require(e, "rewards", p);
  if (!rs.is_array()) fail(p + ".rewards", "expected an array");
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const std::string q = p + ".rewards[" + std::to_string(i) + "]";
    reject_unknown(rs[i], {"scope", "mean", "sigma", "lower", "upper"}, q);
    RewardComponentSpec r;
    r.scope = scope_at(require(rs[i], "scope", q), q + ".scope");
    r.mean = as<std::vector<double>>(require(rs[i], "mean", q), q + ".mean");
    r.sigma = get_or(rs[i], "sigma", 0.0, q);
    r.lower = get_or(rs[i], "lower", 0.0, q);
    r.upper = get_or(rs[i], "upper", 1.0, q);
    rewards.push_back(std::move(r));
  }

  const auto& t = require(e, "transition", p);
  const std::string form = get_or<std::string>(t, "form", "product", p + ".transition");
  JointTransitionSpec spec;
  if (form == "product") {
    reject_unknown(t, {"form", "clusters"}, p + ".transition");
    spec = JointTransitionSpec::product({clusters_from(require(t, "clusters", p + ".transition"),
                                                       p + ".transition.clusters")});
  } else if (form == "mixture") {
    reject_unknown(t, {"form", "weights", "components"}, p + ".transition");
    spec.form = JointTransitionSpec::Form::Mixture;
    spec.weights = as<std::vector<double>>(require(t, "weights", p + ".transition"), p + ".transition.weights");
    const auto& comps = require(t, "components", p + ".transition");
    for (std::size_t c = 0; c < comps.size(); ++c) {
      const std::string q = p + ".transition.components[" + std::to_string(c) + "]";
      spec.components.push_back({clusters_from(require(comps[c], "clusters", q), q + ".clusters")});
    }
  } else {
    fail(p + ".transition.form", "expected 'product' or 'mixture'");
  }

  InitialDistribution rho;
  if (e.contains("rho")) {
    const auto& r = e["rho"];
    const std::string kind = as<std::string>(require(r, "kind", p + ".rho"), p + ".rho.kind");
    if (kind == "uniform") {
      rho.kind = InitialDistribution::Kind::Uniform;
    } else if (kind == "point") {
      rho.kind = InitialDistribution::Kind::Point;
      rho.point = as<State>(require(r, "state", p + ".rho"), p + ".rho.state");
    } else if (kind == "product") {
      rho.kind = InitialDistribution::Kind::Product;
      rho.probs = as<std::vector<std::vector<double>>>(require(r, "probs", p + ".rho"), p + ".rho.probs");
    } else {
      fail(p + ".rho.kind", "expected 'uniform', 'point' or 'product'");
    }
  }
  try {
    return Environment(space, std::move(rewards), std::move(spec), std::move(rho), tau);
  } catch (const ConfigError& err) {
    fail(p, err.what());
  }
}

}  // namespace

void check_scope_consistency(const Environment& env, const std::vector<BasisFunction>& basis) {
  const auto clusters = env.transition().components.front().clusters;
  const std::string why = " (the learner assumes the transition cluster scopes and the basis value scopes are the same sets)";
  for (std::size_t j = 0; j < basis.size(); ++j) {
    const auto& f = basis[j];
    if (f.value_scope.empty()) continue;
    const auto it = std::find_if(clusters.begin(), clusters.end(), [&](const Cluster& c) { return c.scope == f.value_scope; });
    if (it == clusters.end())
      throw ConfigError("scope mismatch: basis function " + std::to_string(j + 1) +
                        " has a value scope that is not a transition cluster scope" + why);
    for (const auto& comp : env.transition().components)
      for (const auto& c : comp.clusters)
        if (c.scope == f.value_scope && !c.parents.subset_of(f.parent_scope))
          throw ConfigError("scope mismatch: basis function " + std::to_string(j + 1) +
                            " has a parent scope missing some parents of its transition cluster" + why);
  }
  for (std::size_t c = 0; c < clusters.size(); ++c)
    if (std::none_of(basis.begin(), basis.end(), [&](const BasisFunction& f) { return f.value_scope == clusters[c].scope; }))
      throw ConfigError("scope mismatch: transition cluster " + std::to_string(c) +
                        " has no basis function over its scope" + why);
}

Experiment build_experiment(const ExperimentConfig& cfg) {
  Experiment ex;
  std::vector<BasisFunction> generated;
  if (cfg.environment.contains("generator")) {
    auto gen = generate(cfg.environment);
    generated = std::move(gen.basis);
    ex.G = gen.G;
    ex.env = std::make_shared<const Environment>(std::move(gen.env));
  } else {
    ex.env = std::make_shared<const Environment>(environment_from(cfg.environment));
  }
  if (cfg.basis) {
    ex.basis = basis_from(*cfg.basis, ex.G);
  } else if (!generated.empty()) {
    ex.basis = std::move(generated);
  } else {
    fail("basis", "required field missing (inline environments need an explicit basis)");
  }
  check_scope_consistency(*ex.env, ex.basis);
  for (const auto& r : ex.env->rewards())
    if (r.upper > cfg.C + 1e-12) fail("C", "smaller than a declared reward upper bound " + std::to_string(r.upper));
  try {
    ex.structure = std::make_shared<const ModelStructure>(ex.env->space(), ex.env->tau(), ex.env->reward_scopes(),
                                                          Basis(ex.env->space(), ex.basis, ex.G));
  } catch (const ConfigError& e) {
    fail("basis", e.what());
  }
  if (cfg.order) {
    try {
      choose_order(*ex.structure, cfg.order, cfg.max_width);
    } catch (const ConfigError& e) {
      fail("elimination_order", e.what());
    }
  }
  return ex;
}

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(doc,
                 {"environment", "basis", "elimination_order", "W", "delta", "sigma", "C", "K", "seeds", "output_dir",
                  "workers", "flags", "planner", "exact_limit", "checkpoint_every"},
                 "");
  ExperimentConfig cfg;
  const auto& env = require(doc, "environment", "");
  if (env.is_string())
    cfg.environment = read_json_file(base_dir / env.get<std::string>());
  else if (env.is_object())
    cfg.environment = env;
  else
    fail("environment", "expected an object or a file path");
  if (doc.contains("basis")) cfg.basis = doc["basis"];

  if (doc.contains("elimination_order")) {
    const auto& o = doc["elimination_order"];
    if (o.is_string()) {
      if (o.get<std::string>() != "min-degree") fail("elimination_order", "expected 'min-degree' or a list of variables");
    } else {
      cfg.order = as<std::vector<int>>(o, "elimination_order");
    }
  }

  cfg.W = as<double>(require(doc, "W", ""), "W");
  if (!(cfg.W > 0.0)) fail("W", "must be positive");
  cfg.delta = as<double>(require(doc, "delta", ""), "delta");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) fail("delta", "must lie in (0, 1)");
  cfg.sigma = as<double>(require(doc, "sigma", ""), "sigma");
  if (cfg.sigma < 0.0) fail("sigma", "must be >= 0");
  cfg.C = as<double>(require(doc, "C", ""), "C");
  cfg.K = as<std::uint64_t>(require(doc, "K", ""), "K");
  if (cfg.K < 1) fail("K", "must be >= 1");
  cfg.seeds = as<std::vector<std::uint64_t>>(require(doc, "seeds", ""), "seeds");
  if (cfg.seeds.empty()) fail("seeds", "must list at least one seed");
  if (std::set<std::uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() != cfg.seeds.size())
    fail("seeds", "must not repeat");
  cfg.output_dir = get_or<std::string>(doc, "output_dir", cfg.output_dir);
  cfg.workers = get_or(doc, "workers", cfg.workers);
  if (cfg.workers < 1) fail("workers", "must be >= 1");
  cfg.exact_limit = get_or(doc, "exact_limit", cfg.exact_limit);
  cfg.checkpoint_every = get_or(doc, "checkpoint_every", cfg.checkpoint_every);
  if (cfg.checkpoint_every < 1) fail("checkpoint_every", "must be >= 1");

  if (doc.contains("flags")) {
    const auto& f = doc["flags"];
    reject_unknown(f, {"rho_weighted_objective", "unclipped_reward_optimism", "track_coverage"}, "flags");
    cfg.rho_weighted_objective = get_or(f, "rho_weighted_objective", false, "flags");
    cfg.unclipped_reward_optimism = get_or(f, "unclipped_reward_optimism", false, "flags");
    cfg.track_coverage = get_or(f, "track_coverage", false, "flags");
  }
  if (doc.contains("planner")) {
    const auto& p = doc["planner"];
    reject_unknown(p, {"solver", "trace", "max_width"}, "planner");
    const auto solver = get_or<std::string>(p, "solver", "propagation", "planner");
    if (solver == "simplex")
      cfg.solver = OracleSolver::Simplex;
    else if (solver != "propagation")
      fail("planner.solver", "expected 'propagation' or 'simplex'");
    cfg.planner_trace = get_or(p, "trace", false, "planner");
    cfg.max_width = get_or<std::size_t>(p, "max_width", cfg.max_width, "planner");
  }

  build_experiment(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_json_file(path), path.parent_path());
}

json serialize_config(const ExperimentConfig& cfg) {
  json doc{{"environment", cfg.environment},
           {"W", cfg.W},
           {"delta", cfg.delta},
           {"sigma", cfg.sigma},
           {"C", cfg.C},
           {"K", cfg.K},
           {"seeds", cfg.seeds},
           {"output_dir", cfg.output_dir},
           {"workers", cfg.workers},
           {"exact_limit", cfg.exact_limit},
           {"checkpoint_every", cfg.checkpoint_every},
           {"flags",
            {{"rho_weighted_objective", cfg.rho_weighted_objective},
             {"unclipped_reward_optimism", cfg.unclipped_reward_optimism},
             {"track_coverage", cfg.track_coverage}}},
           {"planner",
            {{"solver", cfg.solver == OracleSolver::Simplex ? "simplex" : "propagation"},
             {"trace", cfg.planner_trace},
             {"max_width", cfg.max_width}}}};
  if (cfg.basis) doc["basis"] = *cfg.basis;
  doc["elimination_order"] = cfg.order ? json(*cfg.order) : json("min-degree");
  return doc;
}

LearnerOptions learner_options(const ExperimentConfig& cfg) {
  LearnerOptions o;
  o.delta = cfg.delta;
  o.sigma = cfg.sigma;
  o.exact_limit = cfg.exact_limit;
  o.track_coverage = cfg.track_coverage;
  o.planner.W = cfg.W;
  o.planner.tables.C = cfg.C;
  o.planner.tables.clip_reward = !cfg.unclipped_reward_optimism;
  o.planner.order = cfg.order;
  o.planner.max_width = cfg.max_width;
  o.planner.solver = cfg.solver;
  return o;
}

}  // namespace fsmdp
