#include "hoclbf/qp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "hoclbf/log.hpp"

namespace hoclbf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFeasTol = 1e-9;
constexpr double kDualTol = 1e-10;
constexpr double kStepTol = 1e-12;

// Unified constraint a . z >= b.
struct Con {
  Eigen::VectorXd a;
  double b;
};

struct AsResult {
  Eigen::VectorXd z;
  std::vector<int> active;
  Eigen::VectorXd multipliers;  // per active constraint, same order
  int iterations = 0;
  bool hit_limit = false;
};

// Primal active-set method for  min 1/2 z^T Q z + g . z  s.t. cons, starting
// from a point feasible within kFeasTol. Q is diagonal positive definite.
// Equality subproblems are solved in absolute form, so working-set rows are
// landed on exactly and small start violations self-correct.
AsResult active_set_solve(const Eigen::VectorXd& q_diag, const Eigen::VectorXd& g,
                          const std::vector<Con>& cons, Eigen::VectorXd z,
                          std::vector<int> working, int max_iter) {
  const int dim = static_cast<int>(z.size());
  const Eigen::VectorXd q_inv = q_diag.cwiseInverse();

  auto residual = [&](int j, const Eigen::VectorXd& at) {
    return cons[j].a.dot(at) - cons[j].b;
  };

  AsResult res;
  Eigen::VectorXd mu;

  for (int iter = 0; iter < max_iter; ++iter) {
    res.iterations = iter + 1;

    // Equality-constrained subproblem on the working set via the Schur
    // complement  A Q^{-1} A^T mu = b_W + A Q^{-1} g,  z* = Q^{-1}(A^T mu - g).
    const int k = static_cast<int>(working.size());
    Eigen::VectorXd z_star;
    if (k == 0) {
      z_star = -q_inv.cwiseProduct(g);
      mu.resize(0);
    } else {
      Eigen::MatrixXd A(k, dim);
      Eigen::VectorXd bw(k);
      for (int i = 0; i < k; ++i) {
        A.row(i) = cons[working[i]].a;
        bw[i] = cons[working[i]].b;
      }
      Eigen::MatrixXd schur = A * q_inv.asDiagonal() * A.transpose();
      Eigen::VectorXd rhs = bw + A * q_inv.cwiseProduct(g);
      Eigen::LDLT<Eigen::MatrixXd> ldlt(schur);
      mu = ldlt.solve(rhs);
      if ((schur * mu - rhs).norm() > 1e-6 * (1.0 + rhs.norm())) {
        // Dependent working set; drop the row with the smallest |mu| and retry.
        int drop = 0;
        for (int i = 1; i < k; ++i)
          if (std::abs(mu[i]) < std::abs(mu[drop])) drop = i;
        working.erase(working.begin() + drop);
        continue;
      }
      z_star = q_inv.cwiseProduct(A.transpose() * mu - g);
    }

    Eigen::VectorXd p = z_star - z;
    if (p.lpNorm<Eigen::Infinity>() <= kStepTol * (1.0 + z.norm())) {
      // Stationary on the working set; check multiplier signs.
      int worst = -1;
      double worst_mu = -kDualTol;
      for (int i = 0; i < k; ++i) {
        if (mu[i] < worst_mu) {
          worst_mu = mu[i];
          worst = i;
        }
      }
      if (worst < 0) {
        res.z = z_star;
        res.active = working;
        res.multipliers = mu;
        return res;
      }
      working.erase(working.begin() + worst);
      continue;
    }

    // Step toward z_star, blocked by the nearest violated-in-direction row.
    double alpha = 1.0;
    int blocking = -1;
    for (int j = 0; j < static_cast<int>(cons.size()); ++j) {
      if (std::find(working.begin(), working.end(), j) != working.end()) continue;
      const double d = cons[j].a.dot(p);
      if (d >= -1e-14) continue;
      const double a_j = -residual(j, z) / d;
      if (a_j < alpha) {
        alpha = a_j;
        blocking = j;
      }
    }
    alpha = std::max(alpha, 0.0);
    z += alpha * p;
    if (blocking >= 0) {
      // A dependent addition is repaired at the next subproblem solve.
      working.push_back(blocking);
    } else {
      z = z_star;
    }
  }

  res.z = z;
  res.active = working;
  res.multipliers = mu;
  res.hit_limit = true;
  return res;
}

std::vector<Con> unified_constraints(const QpProblem& p, double* row_scale_out) {
  std::vector<Con> cons;
  double scale = 1.0;
  for (const auto& [a, c] : p.ineq) {
    const double nrm = a.norm();
    const double s = nrm > 1e-300 ? nrm : 1.0;
    cons.push_back({a / s, -c / s});
    scale = std::max(scale, std::abs(c) / s);
  }
  for (int j = 0; j < p.dim; ++j) {
    if (p.lower[j] > -kInf) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(p.dim);
      e[j] = 1.0;
      cons.push_back({e, p.lower[j]});
      scale = std::max(scale, std::abs(p.lower[j]));
    }
  }
  for (int j = 0; j < p.dim; ++j) {
    if (p.upper[j] < kInf) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(p.dim);
      e[j] = -1.0;
      cons.push_back({e, -p.upper[j]});
      scale = std::max(scale, std::abs(p.upper[j]));
    }
  }
  if (row_scale_out) *row_scale_out = scale;
  return cons;
}

Eigen::VectorXd clamp_to_box(const QpProblem& p, Eigen::VectorXd z) {
  for (int j = 0; j < p.dim; ++j) {
    if (p.lower[j] > -kInf) z[j] = std::max(z[j], p.lower[j]);
    if (p.upper[j] < kInf) z[j] = std::min(z[j], p.upper[j]);
  }
  return z;
}

double max_violation(const std::vector<Con>& cons, const Eigen::VectorXd& z) {
  double v = 0.0;
  for (const auto& c : cons) v = std::max(v, c.b - c.a.dot(z));
  return v;
}

double sq_violation(const std::vector<Con>& cons, const Eigen::VectorXd& z) {
  double v = 0.0;
  for (const auto& c : cons) {
    const double r = std::max(0.0, c.b - c.a.dot(z));
    v += r * r;
  }
  return v;
}

// Phase 1: minimize 1/2 eta ||z - anchor||^2 + 1/2 ||s||^2 over the general
// rows relaxed by nonnegative slacks, keeping the box hard. Trivially
// feasible from (anchor, violations) and re-anchored until the slack either
// vanishes or stops improving.
Eigen::VectorXd phase1(const QpProblem& p, const std::vector<Con>& general,
                       const std::vector<Con>& box, Eigen::VectorXd anchor,
                       double feas_scale, double* residual_out, bool* ok) {
  const int dim = p.dim;
  const int nrows = static_cast<int>(general.size());
  const double eta = 1e-6;

  Eigen::VectorXd z = anchor;
  for (int pass = 0; pass < 3; ++pass) {
    const int adim = dim + nrows;
    Eigen::VectorXd q_diag(adim), g(adim);
    q_diag.head(dim).setConstant(eta);
    q_diag.tail(nrows).setOnes();
    g.head(dim) = -eta * z;
    g.tail(nrows).setZero();

    std::vector<Con> cons;
    for (int i = 0; i < nrows; ++i) {
      Eigen::VectorXd a = Eigen::VectorXd::Zero(adim);
      a.head(dim) = general[i].a;
      a[dim + i] = 1.0;
      cons.push_back({a, general[i].b});
    }
    for (int i = 0; i < nrows; ++i) {
      Eigen::VectorXd a = Eigen::VectorXd::Zero(adim);
      a[dim + i] = 1.0;
      cons.push_back({a, 0.0});
    }
    for (const auto& c : box) {
      Eigen::VectorXd a = Eigen::VectorXd::Zero(adim);
      a.head(dim) = c.a;
      cons.push_back({a, c.b});
    }

    Eigen::VectorXd start(adim);
    start.head(dim) = z;
    for (int i = 0; i < nrows; ++i)
      start[dim + i] = std::max(0.0, general[i].b - general[i].a.dot(z));

    AsResult r = active_set_solve(q_diag, g, cons, start, {}, 100 * adim);
    z = r.z.head(dim);
    const double viol = max_violation(general, z);
    if (viol <= kFeasTol * feas_scale) {
      *residual_out = sq_violation(general, z);
      *ok = true;
      return z;
    }
  }
  *residual_out = sq_violation(general, z);
  *ok = false;
  return z;
}

}  // namespace

QpProblem assemble(const AffineSystem& sys, const std::vector<ConstraintRow>& rows,
                   const std::vector<std::optional<int>>& slack_assignment,
                   double slack_weight) {
  const int q = sys.control_dim();
  int n_slack = 0;
  for (const auto& s : slack_assignment)
    if (s) n_slack = std::max(n_slack, *s + 1);

  QpProblem p;
  p.dim = q + n_slack;
  p.hessian.resize(p.dim);
  p.hessian.head(q).setOnes();
  p.hessian.tail(n_slack).setConstant(slack_weight);
  p.linear = Eigen::VectorXd::Zero(p.dim);
  p.lower.resize(p.dim);
  p.upper.resize(p.dim);
  p.lower.head(q) = sys.u_min();
  p.upper.head(q) = sys.u_max();
  p.lower.tail(n_slack).setConstant(-kInf);
  p.upper.tail(n_slack).setConstant(kInf);

  for (size_t i = 0; i < rows.size(); ++i) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(p.dim);
    a.head(q) = rows[i].a;
    if (i < slack_assignment.size() && slack_assignment[i])
      a[q + *slack_assignment[i]] = -1.0;
    p.ineq.emplace_back(std::move(a), rows[i].c);
  }
  return p;
}

QpSolution solve(const QpProblem& p) { return solve(p, Eigen::VectorXd()); }

QpSolution solve(const QpProblem& p, const Eigen::VectorXd& warm_start) {
  QpSolution sol;
  double feas_scale = 1.0;
  std::vector<Con> cons = unified_constraints(p, &feas_scale);
  const int nrows = static_cast<int>(p.ineq.size());
  std::vector<Con> general(cons.begin(), cons.begin() + nrows);
  std::vector<Con> box(cons.begin() + nrows, cons.end());

  Eigen::VectorXd z0 = warm_start.size() == p.dim
                           ? clamp_to_box(p, warm_start)
                           : clamp_to_box(p, Eigen::VectorXd::Zero(p.dim));

  if (max_violation(general, z0) > kFeasTol * feas_scale) {
    bool ok = false;
    z0 = phase1(p, general, box, z0, feas_scale, &sol.phase1_residual, &ok);
    if (!ok) {
      sol.status = QpStatus::Infeasible;
      sol.z = z0;
      return sol;
    }
  } else {
    sol.phase1_residual = sq_violation(general, z0);
  }

  // Seed the working set with rows active at the start point.
  std::vector<int> working;
  for (int j = 0; j < static_cast<int>(cons.size()); ++j) {
    if (std::abs(cons[j].a.dot(z0) - cons[j].b) <= kFeasTol * feas_scale &&
        static_cast<int>(working.size()) < p.dim) {
      working.push_back(j);
    }
  }

  const Eigen::VectorXd q_diag = 2.0 * p.hessian;
  AsResult r = active_set_solve(q_diag, p.linear, cons, z0, working, 100 * p.dim);
  sol.iterations = r.iterations;
  if (r.hit_limit) {
    log_warn("qp solve hit the pivot limit; reporting infeasible");
    sol.status = QpStatus::Infeasible;
    sol.z = r.z;
    sol.phase1_residual = sq_violation(general, r.z);
    return sol;
  }

  sol.z = r.z;
  sol.status = QpStatus::Optimal;
  sol.active_set = r.active;
  sol.objective = r.z.dot(p.hessian.cwiseProduct(r.z)) + p.linear.dot(r.z);

  // KKT residuals: stationarity, primal/dual feasibility, complementarity.
  Eigen::VectorXd stat = q_diag.cwiseProduct(r.z) + p.linear;
  double dual = 0.0, compl_res = 0.0;
  for (size_t i = 0; i < r.active.size(); ++i) {
    const Con& c = cons[static_cast<size_t>(r.active[i])];
    const double lam = r.multipliers.size() > static_cast<long>(i) ? r.multipliers[i] : 0.0;
    stat -= lam * c.a;
    dual = std::max(dual, -lam);
    compl_res = std::max(compl_res, std::abs(lam * (c.a.dot(r.z) - c.b)));
  }
  const double primal = max_violation(cons, r.z);
  sol.kkt_residual = std::max({stat.lpNorm<Eigen::Infinity>(), primal, dual, compl_res});
  return sol;
}

}  // namespace hoclbf
