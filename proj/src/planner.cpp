#include "fsmdp/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

namespace fsmdp {

namespace {

/// Product of cardinalities outside `scope`, in floating point so it never overflows.
double state_multiplicity(const FactoredSpace& space, const Scope& scope) {
  double g = 1.0;
  for (std::size_t v = 0; v < space.var_count(); ++v)
    if (!scope.contains(static_cast<int>(v))) g *= space.card(v);
  return g;
}

double variable_weight(const InitialDistribution& rho, const FactoredSpace& space, int var, int value) {
  switch (rho.kind) {
    case InitialDistribution::Kind::Uniform:
      return 1.0 / space.card(var);
    case InitialDistribution::Kind::Point:
      return rho.point[var] == value ? 1.0 : 0.0;
    case InitialDistribution::Kind::Product:
      return rho.probs[var][value];
  }
  return 0.0;
}

}  // namespace

double evaluate_objective(const WeightMatrix& w, const FactoredSpace& space, const Basis& basis) {
  double total = 0.0;
  for (std::size_t j = 0; j < basis.size(); ++j) {
    const double wj = w.at(1, j);
    if (wj == 0.0) continue;
    double s = 0.0;
    for (double h : basis[j].table) s += h;
    total += wj * state_multiplicity(space, basis[j].value_scope) * s;
  }
  return total;
}

std::vector<double> objective_coefficients(const ModelStructure& st, const InitialDistribution* rho) {
  std::vector<double> c(static_cast<std::size_t>(st.tau) * st.basis.size(), 0.0);
  for (std::size_t j = 0; j < st.basis.size(); ++j) {
    const auto& f = st.basis[j];
    double v = 0.0;
    if (rho == nullptr) {
      for (double h : f.table) v += h;
      v *= state_multiplicity(st.space, f.value_scope);
    } else {
      const auto assignments = enumerate_assignments(f.value_scope, st.space);
      for (std::size_t r = 0; r < assignments.size(); ++r) {
        double p = 1.0;
        for (std::size_t k = 0; k < f.value_scope.size(); ++k)
          p *= variable_weight(*rho, st.space, f.value_scope[k], assignments[r].values[k]);
        v += p * f.table[r];
      }
    }
    c[j] = v;
  }
  return c;
}

double Hyperplane::eval(std::span<const double> w) const {
  double v = offset;
  for (std::size_t k = 0; k < coef.size(); ++k) v += coef[k] * w[k];
  return v;
}

double bracket_value(const WeightMatrix& w, const OptimisticTables& tables, std::span<const int> state, int action,
                     int step) {
  const auto& st = tables.structure();
  double v = 0.0;
  for (std::size_t i = 0; i < st.reward_count(); ++i)
    v += tables.reward(i, st.reward_indexer(i).rank_of_state(state), action);
  for (std::size_t j = 0; j < st.basis.size(); ++j) {
    const double w_next = w.at(step + 1, j);
    v -= w.at(step, j) * st.basis.eval(j, state);
    if (w_next != 0.0)
      v += w_next * tables.expectation(j, st.basis.parent_indexer(j).rank_of_state(state), action, sign_of(w_next));
  }
  return v;
}

Hyperplane bracket_hyperplane(const WeightMatrix& w, const OptimisticTables& tables, std::span<const int> state,
                              int action, int step) {
  const auto& st = tables.structure();
  Hyperplane hp;
  hp.coef.assign(w.dimension(), 0.0);
  for (std::size_t i = 0; i < st.reward_count(); ++i)
    hp.offset += tables.reward(i, st.reward_indexer(i).rank_of_state(state), action);
  for (std::size_t j = 0; j < st.basis.size(); ++j) {
    hp.coef[w.coord(step, j)] -= st.basis.eval(j, state);
    if (step < w.tau()) {
      const double w_next = w.at(step + 1, j);
      hp.coef[w.coord(step + 1, j)] +=
          tables.expectation(j, st.basis.parent_indexer(j).rank_of_state(state), action, sign_of(w_next));
    }
  }
  return hp;
}

State extract_violating_state(const ConstraintSystem& sys, std::span<const double> values, const FactoredSpace& space,
                              double tol) {
  State s(space.var_count(), 0);
  for (std::size_t k = sys.eliminated.size(); k-- > 0;) {
    const int x = sys.eliminated[k];
    const auto& f = sys.functions[sys.step_function[k]];
    std::size_t r = 0, stride = 1;
    for (int v : f.scope) {
      r += static_cast<std::size_t>(s[v]) * stride;
      stride *= static_cast<std::size_t>(space.card(v));
    }
    const std::size_t base = sys.step_constraints[k].first + r * static_cast<std::size_t>(space.card(x));
    bool found = false;
    for (int xv = 0; xv < space.card(x) && !found; ++xv) {
      const auto& c = sys.constraints[base + static_cast<std::size_t>(xv)];
      double sum = 0.0;
      for (auto u : c.rhs) sum += values[u];
      if (values[c.lhs] - sum <= tol * (1.0 + std::abs(values[c.lhs]))) {
        s[x] = xv;
        found = true;
      }
    }
    if (!found)
      throw InvariantError("no tight constraint consistent with the fixed values while eliminating x" +
                           std::to_string(x) + "\n" + sys.to_text(space));
  }
  return s;
}

SeparationOracle::SeparationOracle(const OptimisticTables& tables, const EliminationTemplate& elimination, double W,
                                   double margin, OracleSolver solver)
    : tables_(tables), elim_(elimination), W_(W), margin_(margin), solver_(solver), work_(elimination.skeleton()) {}

double SeparationOracle::solve_current() {
  ++lp_solves_;
  if (solver_ == OracleSolver::Simplex) {
    auto res = solve_small_lp(work_);
    values_ = std::move(res.values);
    return res.value;
  }
  return propagate_small_lp(work_, values_);
}

double SeparationOracle::margin_for_current() const {
  double scale = 1.0;
  for (std::size_t v = 0; v < work_.var_count; ++v)
    if (work_.is_seed[v]) scale += std::abs(work_.seed_value[v]);
  return margin_ * scale;
}

double SeparationOracle::max_violation(const WeightMatrix& w) {
  double best = -std::numeric_limits<double>::infinity();
  const int A = tables_.structure().space.action_count();
  for (int l = 1; l <= w.tau(); ++l)
    for (int a = 0; a < A; ++a) {
      elim_.fill_seeds(work_, w, l, a, tables_);
      best = std::max(best, solve_current());
    }
  return best;
}

OracleVerdict SeparationOracle::operator()(const WeightMatrix& w) {
  ++calls_;
  OracleVerdict out;
  for (int l = 1; l <= w.tau(); ++l) {
    if (w.l1_norm(l) <= W_) continue;
    out.feasible = false;
    out.norm_cut = true;
    out.cut.coef.assign(w.dimension(), 0.0);
    for (std::size_t j = 0; j < w.phi(); ++j) {
      const double v = w.at(l, j);
      out.cut.coef[w.coord(l, j)] = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
    }
    out.cut.offset = -W_;
    return out;
  }

  const auto& space = tables_.structure().space;
  const int A = space.action_count();
  int best_l = 0, best_a = -1;
  double best = 0.0;
  for (int l = 1; l <= w.tau(); ++l)
    for (int a = 0; a < A; ++a) {
      elim_.fill_seeds(work_, w, l, a, tables_);
      const double kappa = solve_current();
      if (kappa > margin_for_current() && (best_a < 0 || kappa > best)) {
        best = kappa;
        best_l = l;
        best_a = a;
      }
    }
  if (best_a < 0) return out;

  elim_.fill_seeds(work_, w, best_l, best_a, tables_);
  solve_current();
  out.feasible = false;
  Violation viol{extract_violating_state(work_, values_, space), best_a, best_l, best};
  out.cut = bracket_hyperplane(w, tables_, viol.state, best_a, best_l);
  if (!(out.cut.eval(w.flat()) > 0.0))
    throw InvariantError("separating hyperplane does not exclude the query point");
  out.violation = std::move(viol);
  return out;
}

const char* to_string(CuttingPlaneStatus s) {
  switch (s) {
    case CuttingPlaneStatus::Certified:
      return "certified";
    case CuttingPlaneStatus::BudgetExhausted:
      return "budget-exhausted";
    case CuttingPlaneStatus::VolumeUnderflow:
      return "volume-underflow";
    case CuttingPlaneStatus::Infeasible:
      return "infeasible";
  }
  return "?";
}

std::size_t ellipsoid_budget(std::size_t n, double radius, double phi, double epsilon) {
  const double nn = static_cast<double>(n);
  const double lg = std::log(std::max(3.0 * radius * std::max(phi, 1e-300) / epsilon, std::exp(1.0)));
  return static_cast<std::size_t>(std::ceil(2.0 * nn * (nn + 1.0) * lg));
}

CuttingPlaneResult cutting_plane_solve(std::span<const double> c_in, const CutOracle& oracle,
                                       const CuttingPlaneOptions& opt, bool record_log_det) {
  if (!(opt.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  const auto n = static_cast<Eigen::Index>(c_in.size());
  const double nn = static_cast<double>(n);
  const Eigen::Map<const Eigen::VectorXd> c(c_in.data(), n);

  CuttingPlaneResult out;
  out.budget = opt.max_iterations ? opt.max_iterations : ellipsoid_budget(c_in.size(), opt.radius, c.norm(), opt.epsilon);

  EllipsoidState E;
  E.center = Eigen::VectorXd::Zero(n);
  E.shape = Eigen::MatrixXd::Identity(n, n) * (opt.radius * opt.radius);
  E.log_det = nn * std::log(opt.radius * opt.radius);
  E.best_value = std::numeric_limits<double>::infinity();
  const double underflow = 1e-28 * opt.radius * opt.radius;

  Eigen::VectorXd a(n), Pa(n);
  out.status = CuttingPlaneStatus::BudgetExhausted;
  while (E.iterations < out.budget) {
    const auto cut = oracle(std::span<const double>(E.center.data(), static_cast<std::size_t>(n)));
    double beta;
    if (!cut) {
      const double f = c.dot(E.center);
      if (f < E.best_value) {
        E.best_value = f;
        E.best = E.center;
      }
      a = c;
      beta = E.best_value - opt.epsilon / 2.0;
      ++out.objective_cuts;
    } else {
      a = Eigen::Map<const Eigen::VectorXd>(cut->coef.data(), n);
      beta = -cut->offset;
      ++out.feasibility_cuts;
    }

    if (E.best && opt.early_stop) {
      const double lb = c.dot(E.center) - std::sqrt(std::max(0.0, c.dot(E.shape * c)));
      if (lb >= E.best_value - opt.epsilon) {
        out.status = CuttingPlaneStatus::Certified;
        break;
      }
    }

    Pa.noalias() = E.shape * a;
    const double aPa = a.dot(Pa);
    if (!(aPa > underflow)) {
      out.status = CuttingPlaneStatus::VolumeUnderflow;
      break;
    }
    const double s = std::sqrt(aPa);
    double alpha = (a.dot(E.center) - beta) / s;
    if (alpha >= 1.0) {
      // nothing of the ellipsoid survives the cut
      out.status = E.best ? CuttingPlaneStatus::Certified : CuttingPlaneStatus::Infeasible;
      break;
    }
    alpha = std::max(alpha, 0.0);

    if (n == 1) {
      const double r = std::sqrt(E.shape(0, 0));
      double lo = E.center[0] - r, hi = E.center[0] + r;
      const double bound = beta / a[0];
      if (a[0] > 0.0)
        hi = std::min(hi, bound);
      else
        lo = std::max(lo, bound);
      E.center[0] = 0.5 * (lo + hi);
      E.shape(0, 0) = 0.25 * (hi - lo) * (hi - lo);
      E.log_det = std::log(E.shape(0, 0));
    } else {
      const Eigen::VectorXd bt = Pa / s;
      const double step = (1.0 + nn * alpha) / (nn + 1.0);
      const double scale = nn * nn * (1.0 - alpha * alpha) / (nn * nn - 1.0);
      const double shrink = 2.0 * (1.0 + nn * alpha) / ((nn + 1.0) * (1.0 + alpha));
      E.center -= step * bt;
      E.shape = scale * (E.shape - shrink * bt * bt.transpose());
      E.shape = 0.5 * (E.shape + E.shape.transpose()).eval();
      E.log_det += nn * std::log(scale) + std::log1p(-shrink);
    }
    ++E.iterations;
    if (record_log_det) out.log_det.push_back(E.log_det);
  }

  out.iterations = E.iterations;
  if (!E.best) {
    out.status = CuttingPlaneStatus::Infeasible;
    return out;
  }
  out.x.assign(E.best->data(), E.best->data() + n);
  out.value = E.best_value;
  return out;
}

EliminationOrder choose_order(const ModelStructure& st, const std::optional<std::vector<int>>& order,
                              std::size_t max_width) {
  const CostNetwork net(st.space.var_count(), planner_scopes(st));
  return order ? explicit_order(*order, net) : min_degree_order(net, max_width);
}

Planner::Planner(std::shared_ptr<const ModelStructure> structure, PlannerOptions options)
    : structure_(structure),
      opt_(std::move(options)),
      elim_(structure, choose_order(*structure, opt_.order, opt_.max_width)),
      c_(objective_coefficients(*structure, opt_.rho_weighting ? &*opt_.rho_weighting : nullptr)) {
  if (!(opt_.W > 0.0)) throw ConfigError("W must be positive");
}

PlanResult Planner::plan(const ConfidenceState& confidence, double epsilon) const {
  return plan_with_tables(OptimisticTables::build(confidence, opt_.tables), epsilon);
}

PlanResult Planner::plan_with_tables(OptimisticTables tables, double epsilon) const {
  const auto& st = *structure_;
  const std::size_t phi = st.basis.size();
  SeparationOracle oracle(tables, elim_, opt_.W, opt_.margin, opt_.solver);
  WeightMatrix query(st.tau, phi, opt_.W);

  CutOracle cut_oracle = [&](std::span<const double> x) -> std::optional<Hyperplane> {
    std::copy(x.begin(), x.end(), query.flat().begin());
    auto verdict = oracle(query);
    if (opt_.trace) {
      nlohmann::json line{{"call", oracle.calls()},
                          {"query", std::vector<double>(x.begin(), x.end())},
                          {"verdict", verdict.feasible ? "feasible" : (verdict.norm_cut ? "norm-cut" : "cut")}};
      if (verdict.violation) {
        line["state"] = verdict.violation->state;
        line["action"] = verdict.violation->action;
        line["step"] = verdict.violation->step;
        line["violation"] = verdict.violation->value;
      }
      if (!verdict.feasible) line["cut"] = {{"coef", verdict.cut.coef}, {"offset", verdict.cut.offset}};
      *opt_.trace << line.dump() << '\n';
    }
    if (verdict.feasible) return std::nullopt;
    return std::move(verdict.cut);
  };

  CuttingPlaneOptions cp;
  cp.epsilon = epsilon;
  cp.radius = opt_.W * std::sqrt(static_cast<double>(st.tau) * static_cast<double>(phi));
  cp.max_iterations = opt_.max_iterations;
  cp.early_stop = opt_.early_stop;
  auto solved = cutting_plane_solve(c_, cut_oracle, cp);
  if (solved.status == CuttingPlaneStatus::Infeasible)
    throw SolverError("planner found no feasible weights within the L1 bound W = " + std::to_string(opt_.W));

  PlanResult out{WeightMatrix(st.tau, phi, opt_.W, solved.x), std::move(tables), std::move(solved), 0.0,
                 oracle.calls()};
  out.objective = out.solve.value;
  return out;
}

}  // namespace fsmdp
