#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "hoclbf/barrier.hpp"
#include "hoclbf/field.hpp"

namespace hoclbf {

// ============================================================
// Per-step quadratic program:
//
//   minimize  z^T diag(hessian) z + linear . z
//   s.t.      a_i . z + c_i >= 0            (ineq)
//             lower <= z <= upper           (box, +-inf allowed)
//
// z stacks the control with the slack variables of relaxed rows.
// ============================================================

struct QpProblem {
  int dim = 0;
  Eigen::VectorXd hessian;  // diagonal, entries > 0
  Eigen::VectorXd linear;
  std::vector<std::pair<Eigen::VectorXd, double>> ineq;  // (a, c): a.z + c >= 0
  Eigen::VectorXd lower, upper;
};

enum class QpStatus { Optimal, Infeasible };

struct QpSolution {
  Eigen::VectorXd z;
  double objective = 0.0;
  // Indices into the unified constraint list: general rows first (in ineq
  // order), then finite lower bounds, then finite upper bounds.
  std::vector<int> active_set;
  QpStatus status = QpStatus::Infeasible;
  int iterations = 0;
  double phase1_residual = 0.0;  // sum of squared violations at phase-1 end
  double kkt_residual = 0.0;     // max KKT residual at an Optimal solution
};

// Builds the QP for one control step: minimum-norm control plus quadratic
// slack penalties. slack_assignment[i] is the dense slack index of row i, or
// nullopt for a hard row; a relaxed row becomes a.u + c - delta_k >= 0 with
// delta_k free and weighted by slack_weight in the cost.
QpProblem assemble(const AffineSystem& sys, const std::vector<ConstraintRow>& rows,
                   const std::vector<std::optional<int>>& slack_assignment,
                   double slack_weight);

// Dense primal active-set solve. A feasible start is produced by a phase-1
// subproblem; empty polytopes are reported as Infeasible with the phase-1
// optimum as certificate. An optional warm start seeds the phase-1 anchor.
QpSolution solve(const QpProblem& p);
QpSolution solve(const QpProblem& p, const Eigen::VectorXd& warm_start);

}  // namespace hoclbf
