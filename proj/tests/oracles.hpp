#pragma once

// Independent reference implementations used to freeze expected values.
// Everything here is deliberately the dumbest correct method: fixed-step
// RK4, central differences, exhaustive quantifier loops, projected gradient.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "hoclbf/qp.hpp"
#include "hoclbf/stl.hpp"

namespace hoclbf::testing {

// RK4 on the scalar ODE psi' = -p sign(psi)|psi|^q.
inline double ode_reference(double psi0, double p, double q, double t, double dt = 1e-4) {
  auto f = [&](double s) {
    if (s == 0.0) return 0.0;
    return -p * (s > 0 ? std::pow(s, q) : -std::pow(-s, q));
  };
  double s = psi0;
  double elapsed = 0.0;
  while (elapsed < t - 1e-12) {
    double h = std::min(dt, t - elapsed);
    double k1 = f(s);
    double k2 = f(s + 0.5 * h * k1);
    double k3 = f(s + 0.5 * h * k2);
    double k4 = f(s + h * k3);
    s += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    elapsed += h;
  }
  return s;
}

// Central finite differences of a plain scalar function.
inline Eigen::VectorXd finite_difference_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
    double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (long i = 0; i < x.size(); ++i) {
    Eigen::VectorXd hi = x, lo = x;
    hi[i] += h;
    lo[i] -= h;
    g[i] = (f(hi) - f(lo)) / (2 * h);
  }
  return g;
}

// Brute-force STL evaluation: direct quantifier loops over samples, written
// from the semantics alone (same outward endpoint snapping convention).
inline bool brute_monitor(const SampledTrajectory& traj, const Formula& f, double t) {
  const auto& ts = traj.times;
  auto in_window = [&](size_t i, double lo, double hi) {
    // sample participates if it is the nearest-below of lo, nearest-above of
    // hi, or inside [lo, hi]
    const double tol = 1e-6;
    if (ts[i] >= lo - tol && ts[i] <= hi + tol) return true;
    bool below_ok = ts[i] < lo && (i + 1 >= ts.size() || ts[i + 1] > lo + tol);
    bool above_ok = ts[i] > hi && (i == 0 || ts[i - 1] < hi - tol);
    return below_ok || above_ok;
  };
  switch (f.kind) {
    case FormulaKind::Predicate: {
      size_t best = 0;
      for (size_t i = 1; i < ts.size(); ++i)
        if (std::abs(ts[i] - t) < std::abs(ts[best] - t)) best = i;
      return f.field(traj.states[best]) >= 0.0;
    }
    case FormulaKind::And:
      return brute_monitor(traj, *f.left, t) && brute_monitor(traj, *f.right, t);
    case FormulaKind::Or:
      return brute_monitor(traj, *f.left, t) || brute_monitor(traj, *f.right, t);
    case FormulaKind::Implies:
      return !brute_monitor(traj, *f.left, t) || brute_monitor(traj, *f.right, t);
    case FormulaKind::Always: {
      for (size_t i = 0; i < ts.size(); ++i)
        if (in_window(i, t + f.t_a, t + f.t_b) && !brute_monitor(traj, *f.left, ts[i]))
          return false;
      return true;
    }
    case FormulaKind::Eventually: {
      for (size_t i = 0; i < ts.size(); ++i)
        if (in_window(i, t + f.t_a, t + f.t_b) && brute_monitor(traj, *f.left, ts[i]))
          return true;
      return false;
    }
    case FormulaKind::Until: {
      for (size_t i = 0; i < ts.size(); ++i) {
        if (!in_window(i, t + f.t_a, t + f.t_b)) continue;
        if (!brute_monitor(traj, *f.right, ts[i])) continue;
        bool ok = true;
        for (size_t j = 0; j < ts.size(); ++j) {
          if (ts[j] > ts[i] + 1e-9) continue;
          if (!in_window(j, f.t_a, ts[i])) continue;
          if (!brute_monitor(traj, *f.left, ts[j])) {
            ok = false;
            break;
          }
        }
        if (ok) return true;
      }
      return false;
    }
  }
  return false;
}

// Dual projected-gradient reference for strictly convex QPs (all constraints
// folded into one >= list). Returns the primal objective at the recovered
// point, in the same z^T H z + g.z convention as QpSolution::objective.
inline double projected_gradient_reference(const QpProblem& p, long max_iter = 1000000) {
  const int dim = p.dim;
  std::vector<std::pair<Eigen::VectorXd, double>> cons;  // a.z >= b
  for (const auto& [a, c] : p.ineq) cons.emplace_back(a, -c);
  for (int j = 0; j < dim; ++j) {
    if (std::isfinite(p.lower[j])) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
      e[j] = 1;
      cons.emplace_back(e, p.lower[j]);
    }
    if (std::isfinite(p.upper[j])) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
      e[j] = -1;
      cons.emplace_back(e, -p.upper[j]);
    }
  }
  const int m = static_cast<int>(cons.size());
  Eigen::VectorXd q_inv = (2.0 * p.hessian).cwiseInverse();
  Eigen::MatrixXd A(m, dim);
  Eigen::VectorXd b(m);
  for (int i = 0; i < m; ++i) {
    A.row(i) = cons[i].first;
    b[i] = cons[i].second;
  }
  // Lipschitz constant of the dual gradient.
  Eigen::MatrixXd K = A * q_inv.asDiagonal() * A.transpose();
  double L = K.norm() + 1e-12;
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd lam_prev = lam;
  double theta_prev = 1.0;
  for (long it = 0; it < max_iter; ++it) {
    // Accelerated (FISTA) projected gradient ascent on the dual.
    double theta = (1.0 + std::sqrt(1.0 + 4.0 * theta_prev * theta_prev)) / 2.0;
    Eigen::VectorXd y = lam + ((theta_prev - 1.0) / theta) * (lam - lam_prev);
    y = y.cwiseMax(0.0);
    Eigen::VectorXd z = q_inv.cwiseProduct(A.transpose() * y - p.linear);
    Eigen::VectorXd grad = b - A * z;  // ascent direction is -(Az - b)
    Eigen::VectorXd next = (y - grad * (-1.0 / L)).cwiseMax(0.0);
    if ((next - lam).lpNorm<Eigen::Infinity>() < 1e-14 && it > 100) {
      lam = next;
      break;
    }
    lam_prev = lam;
    lam = next;
    theta_prev = theta;
  }
  Eigen::VectorXd z = q_inv.cwiseProduct(A.transpose() * lam - p.linear);
  // Polish: project z onto the box and report the objective.
  for (int j = 0; j < dim; ++j)
    z[j] = std::clamp(z[j], p.lower[j], p.upper[j]);
  return z.dot(p.hessian.cwiseProduct(z)) + p.linear.dot(z);
}

}  // namespace hoclbf::testing
