#include "fsmdp/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

namespace fsmdp {

namespace {

std::string raw_dump(const ConstraintSystem& sys) {
  std::ostringstream os;
  os << "system (action " << sys.action << ", step " << sys.step << "):\n";
  for (std::size_t v = 0; v < sys.var_count; ++v)
    if (sys.is_seed[v]) os << "  u" << v << " = " << sys.seed_value[v] << '\n';
  for (const auto& c : sys.constraints) {
    os << "  u" << c.lhs << " >=";
    for (auto r : c.rhs) os << " u" << r;
    os << '\n';
  }
  return os.str();
}

class RevisedSimplex {
 public:
  RevisedSimplex(Eigen::MatrixXd A, Eigen::VectorXd b, std::vector<std::size_t> basis, const SimplexOptions& opt)
      : A_(std::move(A)), b_(std::move(b)), basis_(std::move(basis)), opt_(opt) {
    refactor();
  }

  /// Runs to optimality over the columns with allowed[j]; returns false if unbounded.
  bool run(const Eigen::VectorXd& cost, const std::vector<bool>& allowed) {
    const auto m = static_cast<Eigen::Index>(basis_.size());
    const auto n = A_.cols();
    std::vector<bool> basic(static_cast<std::size_t>(n), false);
    for (auto j : basis_) basic[j] = true;
    Eigen::VectorXd cB(m);
    while (true) {
      for (Eigen::Index i = 0; i < m; ++i) cB[i] = cost[static_cast<Eigen::Index>(basis_[i])];
      const Eigen::VectorXd y = Binv_.transpose() * cB;
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!allowed[j] || basic[j]) continue;
        if (cost[j] - y.dot(A_.col(j)) < -opt_.tolerance) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      const Eigen::VectorXd col = Binv_ * A_.col(enter);
      Eigen::Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m; ++i) {
        if (col[i] <= opt_.tolerance) continue;
        const double ratio = std::max(0.0, x_[i]) / col[i];
        if (leave < 0 || ratio < best - 1e-12) {
          leave = i;
          best = ratio;
        } else if (ratio <= best + 1e-12 && basis_[i] < basis_[leave]) {
          leave = i;
          best = std::min(best, ratio);
        }
      }
      if (leave < 0) return false;
      basic[basis_[leave]] = false;
      basic[enter] = true;
      pivot(leave, static_cast<std::size_t>(enter), col);
    }
  }

  void pivot(Eigen::Index r, std::size_t enter, const Eigen::VectorXd& col) {
    if (++pivots_ > opt_.max_pivots) throw SolverError("simplex pivot budget exhausted");
    const double p = col[r];
    Binv_.row(r) /= p;
    x_[r] /= p;
    for (Eigen::Index i = 0; i < Binv_.rows(); ++i) {
      if (i == r || col[i] == 0.0) continue;
      Binv_.row(i) -= col[i] * Binv_.row(r);
      x_[i] -= col[i] * x_[r];
    }
    basis_[r] = enter;
    if (pivots_ % opt_.refactor_every == 0) refactor();
  }

  void refactor() {
    const auto m = static_cast<Eigen::Index>(basis_.size());
    Eigen::MatrixXd B(m, m);
    for (Eigen::Index i = 0; i < m; ++i) B.col(i) = A_.col(static_cast<Eigen::Index>(basis_[i]));
    Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
    if (m > 0 && !lu.isInvertible()) throw SolverError("simplex basis became singular");
    Binv_ = m > 0 ? Eigen::MatrixXd(lu.inverse()) : Eigen::MatrixXd(0, 0);
    x_ = Binv_ * b_;
  }

  void remove_row(Eigen::Index r) {
    const auto m = A_.rows();
    Eigen::MatrixXd A(m - 1, A_.cols());
    Eigen::VectorXd b(m - 1);
    for (Eigen::Index i = 0, k = 0; i < m; ++i) {
      if (i == r) continue;
      A.row(k) = A_.row(i);
      b[k++] = b_[i];
    }
    A_ = std::move(A);
    b_ = std::move(b);
    basis_.erase(basis_.begin() + r);
    refactor();
  }

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::MatrixXd& Binv() const { return Binv_; }
  const std::vector<std::size_t>& basis() const { return basis_; }
  const Eigen::VectorXd& x() const { return x_; }
  std::size_t pivots() const { return pivots_; }

 private:
  Eigen::MatrixXd A_;
  Eigen::VectorXd b_;
  std::vector<std::size_t> basis_;
  SimplexOptions opt_;
  Eigen::MatrixXd Binv_;
  Eigen::VectorXd x_;
  std::size_t pivots_ = 0;
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp, const SimplexOptions& options) {
  const std::size_t nv = lp.var_count();
  const auto m = static_cast<Eigen::Index>(lp.rows.size());

  // column layout: x+ (and x- for free vars), then slacks, then artificials
  std::vector<Eigen::Index> pos(nv), neg(nv, -1);
  Eigen::Index cols = 0;
  for (std::size_t v = 0; v < nv; ++v) {
    pos[v] = cols++;
    if (lp.free[v]) neg[v] = cols++;
  }
  std::vector<Eigen::Index> slack(lp.rows.size(), -1);
  for (std::size_t i = 0; i < lp.rows.size(); ++i)
    if (lp.rows[i].sense != LinearProgram::Sense::Eq) slack[i] = cols++;

  std::vector<double> sign(lp.rows.size(), 1.0);
  std::vector<Eigen::Index> art(lp.rows.size(), -1);
  for (std::size_t i = 0; i < lp.rows.size(); ++i) {
    const auto& row = lp.rows[i];
    if (row.rhs < 0.0) sign[i] = -1.0;
    const double slack_coef = row.sense == LinearProgram::Sense::Le ? 1.0 : -1.0;
    if (slack[i] < 0 || slack_coef * sign[i] < 0.0) art[i] = cols++;
  }

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, cols);
  Eigen::VectorXd b(m);
  std::vector<std::size_t> basis(lp.rows.size());
  for (std::size_t i = 0; i < lp.rows.size(); ++i) {
    const auto& row = lp.rows[i];
    const auto r = static_cast<Eigen::Index>(i);
    for (const auto& [v, a] : row.terms) {
      A(r, pos[v]) += sign[i] * a;
      if (neg[v] >= 0) A(r, neg[v]) -= sign[i] * a;
    }
    if (slack[i] >= 0) A(r, slack[i]) = sign[i] * (row.sense == LinearProgram::Sense::Le ? 1.0 : -1.0);
    if (art[i] >= 0) A(r, art[i]) = 1.0;
    b[r] = sign[i] * row.rhs;
    basis[i] = static_cast<std::size_t>(art[i] >= 0 ? art[i] : slack[i]);
  }

  std::vector<bool> is_art(static_cast<std::size_t>(cols), false);
  for (auto a : art)
    if (a >= 0) is_art[a] = true;

  RevisedSimplex rs(std::move(A), std::move(b), std::move(basis), options);
  LpResult out;

  if (std::find(is_art.begin(), is_art.end(), true) != is_art.end()) {
    Eigen::VectorXd c1 = Eigen::VectorXd::Zero(cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      if (is_art[j]) c1[j] = 1.0;
    rs.run(c1, std::vector<bool>(static_cast<std::size_t>(cols), true));
    double infeas = 0.0;
    for (std::size_t i = 0; i < rs.basis().size(); ++i)
      if (is_art[rs.basis()[i]]) infeas += rs.x()[static_cast<Eigen::Index>(i)];
    double scale = 1.0;
    for (const auto& row : lp.rows) scale = std::max(scale, std::abs(row.rhs));
    if (infeas > 1e-7 * scale) {
      out.status = LpStatus::Infeasible;
      out.pivots = rs.pivots();
      return out;
    }
    // drive zero-level artificials out of the basis, dropping redundant rows
    for (std::size_t i = 0; i < rs.basis().size();) {
      if (!is_art[rs.basis()[i]]) {
        ++i;
        continue;
      }
      const auto r = static_cast<Eigen::Index>(i);
      const Eigen::RowVectorXd row = rs.Binv().row(r) * rs.A();
      Eigen::Index pick = -1;
      for (Eigen::Index j = 0; j < cols && pick < 0; ++j) {
        if (is_art[j] || std::find(rs.basis().begin(), rs.basis().end(), static_cast<std::size_t>(j)) !=
                             rs.basis().end())
          continue;
        if (std::abs(row[j]) > 1e-9) pick = j;
      }
      if (pick >= 0) {
        const Eigen::VectorXd col = rs.Binv() * rs.A().col(pick);
        rs.pivot(r, static_cast<std::size_t>(pick), col);
        ++i;
      } else {
        rs.remove_row(r);
      }
    }
  }

  Eigen::VectorXd c2 = Eigen::VectorXd::Zero(cols);
  for (std::size_t v = 0; v < nv; ++v) {
    c2[pos[v]] = lp.cost[v];
    if (neg[v] >= 0) c2[neg[v]] = -lp.cost[v];
  }
  std::vector<bool> allowed(static_cast<std::size_t>(cols));
  for (Eigen::Index j = 0; j < cols; ++j) allowed[j] = !is_art[j];
  const bool bounded = rs.run(c2, allowed);
  out.pivots = rs.pivots();
  if (!bounded) {
    out.status = LpStatus::Unbounded;
    return out;
  }

  std::vector<double> xs(static_cast<std::size_t>(cols), 0.0);
  for (std::size_t i = 0; i < rs.basis().size(); ++i) xs[rs.basis()[i]] = rs.x()[static_cast<Eigen::Index>(i)];
  out.x.resize(nv);
  out.objective = 0.0;
  for (std::size_t v = 0; v < nv; ++v) {
    out.x[v] = xs[pos[v]] - (neg[v] >= 0 ? xs[neg[v]] : 0.0);
    out.objective += lp.cost[v] * out.x[v];
  }
  out.status = LpStatus::Optimal;
  return out;
}

double propagate_small_lp(const ConstraintSystem& sys, std::vector<double>& values) {
  values.resize(sys.var_count);
  for (std::size_t v = 0; v < sys.var_count; ++v)
    values[v] = sys.is_seed[v] ? sys.seed_value[v] : -std::numeric_limits<double>::infinity();
  for (const auto& c : sys.constraints) {
    double s = 0.0;
    for (auto r : c.rhs) s += values[r];
    if (s > values[c.lhs]) values[c.lhs] = s;
  }
  double total = 0.0;
  for (auto t : sys.terminal_vars) total += values[t];
  return total;
}

SmallLpResult propagate_small_lp(const ConstraintSystem& sys) {
  SmallLpResult out;
  out.value = propagate_small_lp(sys, out.values);
  out.tight = tight_constraints(sys, out.values);
  return out;
}

std::vector<std::size_t> tight_constraints(const ConstraintSystem& sys, std::span<const double> values, double tol) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < sys.constraints.size(); ++k) {
    const auto& c = sys.constraints[k];
    double s = 0.0;
    for (auto r : c.rhs) s += values[r];
    if (values[c.lhs] - s <= tol * (1.0 + std::abs(values[c.lhs]))) out.push_back(k);
  }
  return out;
}

SmallLpResult solve_small_lp(const ConstraintSystem& sys, const SimplexOptions& options) {
  std::vector<std::ptrdiff_t> col(sys.var_count, -1);
  LinearProgram lp;
  for (std::size_t v = 0; v < sys.var_count; ++v)
    if (!sys.is_seed[v]) col[v] = static_cast<std::ptrdiff_t>(lp.add_var(0.0, true));
  double constant = 0.0;
  for (auto t : sys.terminal_vars) {
    if (col[t] < 0)
      constant += sys.seed_value[t];
    else
      lp.cost[col[t]] += 1.0;
  }
  for (const auto& c : sys.constraints) {
    std::vector<std::pair<std::size_t, double>> terms{{static_cast<std::size_t>(col[c.lhs]), 1.0}};
    double rhs = 0.0;
    for (auto r : c.rhs) {
      if (col[r] < 0)
        rhs += sys.seed_value[r];
      else
        terms.emplace_back(static_cast<std::size_t>(col[r]), -1.0);
    }
    lp.add_row(std::move(terms), LinearProgram::Sense::Ge, rhs);
  }

  SmallLpResult out;
  double lp_value = constant;
  if (lp.var_count() > 0) {
    const auto res = solve_lp(lp, options);
    if (res.status != LpStatus::Optimal)
      throw SolverError(std::string("oracle LP reported ") +
                        (res.status == LpStatus::Infeasible ? "infeasible" : "unbounded") + "\n" + raw_dump(sys));
    lp_value += res.objective;
    out.pivots = res.pivots;
  }

  // polish: the tightest feasible values, computed in elimination order
  out.value = propagate_small_lp(sys, out.values);
  if (std::abs(out.value - lp_value) > 1e-7 * (1.0 + std::abs(out.value)))
    throw SolverError("oracle LP optimum " + std::to_string(lp_value) + " disagrees with polished value " +
                      std::to_string(out.value) + "\n" + raw_dump(sys));
  out.tight = tight_constraints(sys, out.values);
  return out;
}

}  // namespace fsmdp
