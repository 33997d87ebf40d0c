#include "fsmdp/elimination.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace fsmdp {

namespace {

void check_permutation(const std::vector<int>& order, std::size_t m) {
  if (order.size() != m) throw ConfigError("elimination order must list every state variable exactly once");
  std::vector<bool> seen(m, false);
  for (int v : order) {
    if (v < 0 || static_cast<std::size_t>(v) >= m || seen[v])
      throw ConfigError("elimination order must list every state variable exactly once");
    seen[v] = true;
  }
}

std::string scope_text(const Scope& z) {
  std::ostringstream os;
  os << '{';
  for (std::size_t k = 0; k < z.size(); ++k) os << (k ? "," : "") << 'x' << z[k];
  os << '}';
  return os.str();
}

}  // namespace

CostNetwork::CostNetwork(std::size_t var_count, const std::vector<Scope>& scopes)
    : adj_(var_count, std::vector<bool>(var_count, false)), used_(var_count, false) {
  for (const auto& z : scopes) {
    for (int u : z) {
      if (static_cast<std::size_t>(u) >= var_count) throw ConfigError("scope index out of range for cost network");
      used_[u] = true;
      for (int v : z)
        if (u != v) adj_[u][v] = true;
    }
  }
}

std::size_t CostNetwork::degree(int v) const {
  return static_cast<std::size_t>(std::count(adj_[v].begin(), adj_[v].end(), true));
}

std::size_t CostNetwork::edge_count() const {
  std::size_t e = 0;
  for (std::size_t v = 0; v < adj_.size(); ++v) e += degree(static_cast<int>(v));
  return e / 2;
}

std::vector<Scope> planner_scopes(const ModelStructure& structure) {
  std::vector<Scope> out = structure.reward_scopes;
  for (const auto& f : structure.basis) out.push_back(f.value_scope.union_with(f.parent_scope));
  return out;
}

std::size_t induced_width(const std::vector<int>& order, const CostNetwork& network) {
  const std::size_t m = network.var_count();
  check_permutation(order, m);
  std::vector<std::vector<bool>> adj(m, std::vector<bool>(m));
  for (std::size_t u = 0; u < m; ++u)
    for (std::size_t v = 0; v < m; ++v) adj[u][v] = network.adjacent(static_cast<int>(u), static_cast<int>(v));
  std::vector<bool> gone(m, false);
  std::size_t width = 0;
  for (int x : order) {
    std::vector<int> nb;
    for (std::size_t u = 0; u < m; ++u)
      if (!gone[u] && adj[x][u]) nb.push_back(static_cast<int>(u));
    width = std::max(width, nb.size());
    for (int a : nb)
      for (int b : nb)
        if (a != b) adj[a][b] = true;
    gone[x] = true;
  }
  return width;
}

EliminationOrder min_degree_order(const CostNetwork& network, std::size_t max_width) {
  const std::size_t m = network.var_count();
  std::vector<std::vector<bool>> adj(m, std::vector<bool>(m));
  for (std::size_t u = 0; u < m; ++u)
    for (std::size_t v = 0; v < m; ++v) adj[u][v] = network.adjacent(static_cast<int>(u), static_cast<int>(v));
  std::vector<bool> gone(m, false);
  std::vector<std::size_t> original(m);
  for (std::size_t v = 0; v < m; ++v) original[v] = network.degree(static_cast<int>(v));
  EliminationOrder out;
  for (std::size_t step = 0; step < m; ++step) {
    int best = -1;
    std::size_t best_deg = std::numeric_limits<std::size_t>::max();
    for (std::size_t v = 0; v < m; ++v) {
      if (gone[v]) continue;
      std::size_t d = 0;
      for (std::size_t u = 0; u < m; ++u) d += (!gone[u] && adj[v][u]) ? 1 : 0;
      if (d < best_deg || (d == best_deg && original[v] < original[best])) {
        best_deg = d;
        best = static_cast<int>(v);
      }
    }
    std::vector<int> nb;
    for (std::size_t u = 0; u < m; ++u)
      if (!gone[u] && adj[best][u]) nb.push_back(static_cast<int>(u));
    for (int a : nb)
      for (int b : nb)
        if (a != b) adj[a][b] = true;
    gone[best] = true;
    out.order.push_back(best);
    out.width = std::max(out.width, nb.size());
  }
  if (out.width > max_width)
    throw ConfigError("min-degree elimination order has induced width " + std::to_string(out.width) +
                      " above the configured limit " + std::to_string(max_width) +
                      "; supply an explicit elimination order");
  return out;
}

EliminationOrder explicit_order(std::vector<int> order, const CostNetwork& network) {
  EliminationOrder out;
  out.width = induced_width(order, network);
  out.order = std::move(order);
  return out;
}

std::size_t ConstraintSystem::seed_count() const {
  return static_cast<std::size_t>(std::count(is_seed.begin(), is_seed.end(), true));
}

std::string ConstraintSystem::to_text(const FactoredSpace& space) const {
  std::ostringstream os;
  os << "# oracle system: action " << action << ", step " << step << ", " << var_count << " variables, "
     << constraints.size() << " max-constraints\n";
  for (const auto& f : functions) {
    if (f.kind == LpFunction::Kind::Eliminated) continue;
    const auto assignments = enumerate_assignments(f.scope, space);
    for (std::size_t r = 0; r < f.size; ++r) {
      os << "u" << f.first_var + r << " = ";
      os << (f.kind == LpFunction::Kind::Reward ? "R" : "c") << f.source << '(';
      for (std::size_t k = 0; k < f.scope.size(); ++k)
        os << (k ? "," : "") << 'x' << f.scope[k] << '=' << assignments[r].values[k];
      os << ") := " << seed_value[f.first_var + r] << '\n';
    }
  }
  for (std::size_t s = 0; s < eliminated.size(); ++s) {
    const auto& f = functions[step_function[s]];
    os << "# eliminate x" << eliminated[s] << " -> u" << f.first_var << "..u" << f.first_var + f.size - 1
       << " over " << scope_text(f.scope) << '\n';
    for (std::size_t c = step_constraints[s].first; c < step_constraints[s].second; ++c) {
      const auto& mc = constraints[c];
      os << "u" << mc.lhs << " >= ";
      if (mc.rhs.empty()) os << '0';
      for (std::size_t k = 0; k < mc.rhs.size(); ++k) os << (k ? " + " : "") << 'u' << mc.rhs[k];
      os << "    [x" << mc.eliminated_var << '=' << mc.eliminated_value << "]\n";
    }
  }
  os << "minimize";
  for (std::size_t k = 0; k < terminal_vars.size(); ++k) os << (k ? " + " : " ") << 'u' << terminal_vars[k];
  os << '\n';
  return os.str();
}

EliminationTemplate::EliminationTemplate(std::shared_ptr<const ModelStructure> structure,
                                         const EliminationOrder& order)
    : structure_(std::move(structure)), order_(order) {
  const auto& st = *structure_;
  const auto& space = st.space;
  const std::size_t m = space.var_count();
  check_permutation(order_.order, m);

  auto& sys = skeleton_;
  std::vector<ScopeIndexer> idx;
  auto add_function = [&](LpFunction::Kind kind, std::size_t source, const Scope& scope) {
    idx.emplace_back(scope, space);
    sys.functions.push_back({kind, source, scope, sys.var_count, idx.back().size()});
    sys.var_count += idx.back().size();
    const bool seed = kind != LpFunction::Kind::Eliminated;
    sys.is_seed.resize(sys.var_count, seed);
    return sys.functions.size() - 1;
  };

  std::vector<std::size_t> active;
  auto route = [&](std::size_t f) {
    if (sys.functions[f].scope.empty())
      sys.terminal_vars.push_back(sys.functions[f].first_var);
    else
      active.push_back(f);
  };

  for (std::size_t i = 0; i < st.reward_count(); ++i) {
    reward_block_.push_back(add_function(LpFunction::Kind::Reward, i, st.reward_scopes[i]));
    route(reward_block_.back());
  }
  State buf(m, 0);
  for (std::size_t j = 0; j < st.basis.size(); ++j) {
    const auto& f = st.basis[j];
    const Scope u = f.value_scope.union_with(f.parent_scope);
    basis_block_.push_back(add_function(LpFunction::Kind::Basis, j, u));
    auto& vr = basis_value_rank_.emplace_back();
    auto& pr = basis_parent_rank_.emplace_back();
    const auto n = idx.back().size();
    for (std::size_t r = 0; r < n; ++r) {
      const auto vals = unrank(u, r, space);
      for (std::size_t k = 0; k < u.size(); ++k) buf[u[k]] = vals[k];
      vr.push_back(st.basis.value_indexer(j).rank_of_state(buf));
      pr.push_back(st.basis.parent_indexer(j).rank_of_state(buf));
    }
    route(basis_block_.back());
  }

  for (int x : order_.order) {
    std::vector<std::size_t> relevant;
    std::vector<std::size_t> rest;
    for (auto f : active) (sys.functions[f].scope.contains(x) ? relevant : rest).push_back(f);
    if (relevant.empty()) continue;
    std::vector<int> vars;
    for (auto f : relevant)
      for (int v : sys.functions[f].scope)
        if (v != x) vars.push_back(v);
    const Scope residual = Scope::from_unsorted(vars);
    const auto e = add_function(LpFunction::Kind::Eliminated, static_cast<std::size_t>(x), residual);
    const std::size_t begin = sys.constraints.size();
    for (std::size_t r = 0; r < sys.functions[e].size; ++r) {
      const auto vals = unrank(residual, r, space);
      for (std::size_t k = 0; k < residual.size(); ++k) buf[residual[k]] = vals[k];
      for (int xv = 0; xv < space.card(x); ++xv) {
        buf[x] = xv;
        MaxConstraint mc{sys.functions[e].first_var + r, {}, x, xv};
        for (auto f : relevant) mc.rhs.push_back(sys.functions[f].first_var + idx[f].rank_of_state(buf));
        sys.constraints.push_back(std::move(mc));
      }
    }
    sys.step_constraints.emplace_back(begin, sys.constraints.size());
    sys.step_function.push_back(e);
    sys.eliminated.push_back(x);
    active = std::move(rest);
    route(e);
  }
  if (!active.empty()) throw InvariantError("variable elimination left functions with nonempty scope");
  sys.seed_value.assign(sys.var_count, 0.0);
}

void EliminationTemplate::fill_seeds(ConstraintSystem& sys, const WeightMatrix& w, int step, int action,
                                     const OptimisticTables& tables) const {
  const auto& st = *structure_;
  sys.action = action;
  sys.step = step;
  for (std::size_t i = 0; i < reward_block_.size(); ++i) {
    const auto& f = sys.functions[reward_block_[i]];
    for (std::size_t z = 0; z < f.size; ++z) sys.seed_value[f.first_var + z] = tables.reward(i, z, action);
  }
  for (std::size_t j = 0; j < basis_block_.size(); ++j) {
    const auto& f = sys.functions[basis_block_[j]];
    const double w_now = w.at(step, j);
    const double w_next = w.at(step + 1, j);
    const Sign s = sign_of(w_next);
    const auto& h = st.basis[j].table;
    const auto& vr = basis_value_rank_[j];
    const auto& pr = basis_parent_rank_[j];
    for (std::size_t r = 0; r < f.size; ++r)
      sys.seed_value[f.first_var + r] =
          -w_now * h[vr[r]] + (w_next == 0.0 ? 0.0 : w_next * tables.expectation(j, pr[r], action, s));
  }
}

ConstraintSystem EliminationTemplate::instantiate(const WeightMatrix& w, int step, int action,
                                                  const OptimisticTables& tables) const {
  ConstraintSystem sys = skeleton_;
  fill_seeds(sys, w, step, action, tables);
  return sys;
}

std::size_t EliminationTemplate::constraint_bound() const {
  std::size_t n = 0;
  for (std::size_t s = 0; s < skeleton_.eliminated.size(); ++s)
    n += skeleton_.functions[skeleton_.step_function[s]].size *
         static_cast<std::size_t>(structure_->space.card(skeleton_.eliminated[s]));
  return n;
}

ConstraintSystem generate_constraints(const WeightMatrix& w, int step, int action, const OptimisticTables& tables,
                                      const EliminationOrder& order) {
  return EliminationTemplate(tables.structure_ptr(), order).instantiate(w, step, action, tables);
}

}  // namespace fsmdp
