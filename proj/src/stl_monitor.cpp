#include <algorithm>
#include <cmath>

#include "hoclbf/errors.hpp"
#include "hoclbf/stl.hpp"

namespace hoclbf {

namespace {

constexpr double kTimeTol = 1e-6;

// Index of the last sample at or before t (outward snap of a lower endpoint).
size_t snap_down(const std::vector<double>& times, double t) {
  auto it = std::upper_bound(times.begin(), times.end(), t + kTimeTol);
  if (it == times.begin()) return 0;
  return static_cast<size_t>(std::distance(times.begin(), it)) - 1;
}

// Index of the first sample at or after t (outward snap of an upper endpoint).
size_t snap_up(const std::vector<double>& times, double t) {
  auto it = std::lower_bound(times.begin(), times.end(), t - kTimeTol);
  if (it == times.end()) return times.size() - 1;
  return static_cast<size_t>(std::distance(times.begin(), it));
}

size_t nearest(const std::vector<double>& times, double t) {
  size_t lo = snap_down(times, t);
  if (lo + 1 < times.size() &&
      std::abs(times[lo + 1] - t) < std::abs(times[lo] - t))
    return lo + 1;
  return lo;
}

bool eval(const SampledTrajectory& traj, const Formula& f, double t) {
  switch (f.kind) {
    case FormulaKind::Predicate:
      return f.field(traj.states[nearest(traj.times, t)]) >= 0.0;
    case FormulaKind::And:
      return eval(traj, *f.left, t) && eval(traj, *f.right, t);
    case FormulaKind::Or:
      return eval(traj, *f.left, t) || eval(traj, *f.right, t);
    case FormulaKind::Implies:
      return !eval(traj, *f.left, t) || eval(traj, *f.right, t);
    case FormulaKind::Always: {
      const size_t lo = snap_down(traj.times, t + f.t_a);
      const size_t hi = snap_up(traj.times, t + f.t_b);
      for (size_t i = lo; i <= hi; ++i) {
        if (!eval(traj, *f.left, traj.times[i])) return false;
      }
      return true;
    }
    case FormulaKind::Eventually: {
      const size_t lo = snap_down(traj.times, t + f.t_a);
      const size_t hi = snap_up(traj.times, t + f.t_b);
      for (size_t i = lo; i <= hi; ++i) {
        if (eval(traj, *f.left, traj.times[i])) return true;
      }
      return false;
    }
    case FormulaKind::Until: {
      // exists t' in t+I satisfying the right operand, with the left operand
      // holding on [t_a, t'] (absolute window start).
      const size_t lo = snap_down(traj.times, t + f.t_a);
      const size_t hi = snap_up(traj.times, t + f.t_b);
      for (size_t i = lo; i <= hi; ++i) {
        if (!eval(traj, *f.right, traj.times[i])) continue;
        bool left_holds = true;
        const size_t glo = snap_down(traj.times, f.t_a);
        for (size_t j = glo; j <= i; ++j) {
          if (!eval(traj, *f.left, traj.times[j])) {
            left_holds = false;
            break;
          }
        }
        if (left_holds) return true;
      }
      return false;
    }
  }
  return false;
}

}  // namespace

bool monitor(const SampledTrajectory& traj, const Formula& f, double t) {
  if (traj.times.empty()) throw InsufficientHorizon("empty trajectory");
  const double needed = t + horizon(f);
  if (traj.times.back() + kTimeTol < needed)
    throw InsufficientHorizon("trajectory ends at " + std::to_string(traj.times.back()) +
                              " but the formula needs " + std::to_string(needed));
  return eval(traj, f, t);
}

// ------------------------------------------------------------
// Decomposition into atomic tasks.
// ------------------------------------------------------------

namespace {

struct DecomposeState {
  std::vector<AtomicTask>& tasks;
  std::vector<FormulaPtr>& residuals;
  const Eigen::VectorXd& x0;
  int counter = 0;
  int next_group = 0;

  std::string fresh_id(TaskKind kind) {
    return (kind == TaskKind::G ? "g" : "f") + std::to_string(counter++);
  }

  AtomicTask atom(TaskKind kind, double t_a, double t_b, const Formula& pred,
                  std::optional<int> group) {
    AtomicTask task;
    task.id = fresh_id(kind);
    task.kind = kind;
    task.t_a = t_a;
    task.t_b = t_b;
    task.predicate = pred.field;
    task.pred_expr = pred.expr;
    task.pred_text = pred.source_text;
    task.disjunction_group = group;
    return task;
  }

  void rec(const Formula& f, std::optional<int> group) {
    switch (f.kind) {
      case FormulaKind::Predicate:
        // A bare predicate is an immediate one-instant obligation.
        tasks.push_back(atom(TaskKind::G, 0.0, 0.0, f, group));
        return;
      case FormulaKind::Always:
        if (f.left->kind != FormulaKind::Predicate)
          throw Intractable("nested temporal operator under G");
        tasks.push_back(atom(TaskKind::G, f.t_a, f.t_b, *f.left, group));
        return;
      case FormulaKind::Eventually:
        if (f.left->kind != FormulaKind::Predicate)
          throw Intractable("nested temporal operator under F");
        tasks.push_back(atom(TaskKind::F, f.t_a, f.t_b, *f.left, group));
        return;
      case FormulaKind::Until: {
        if (f.left->kind != FormulaKind::Predicate ||
            f.right->kind != FormulaKind::Predicate)
          throw Intractable("until operands must be predicates");
        if (group) throw Intractable("until inside a disjunction is not atomic");
        // G segment over [t_a, t'] paired with the F task on the interval;
        // t' resolves at runtime to the F satisfaction instant.
        AtomicTask g = atom(TaskKind::G, f.t_a, f.t_b, *f.left, std::nullopt);
        AtomicTask fe = atom(TaskKind::F, f.t_a, f.t_b, *f.right, std::nullopt);
        g.until_partner = fe.id;
        tasks.push_back(std::move(g));
        tasks.push_back(std::move(fe));
        return;
      }
      case FormulaKind::And:
        if (group) throw Intractable("conjunction inside a disjunction is not atomic");
        rec(*f.left, std::nullopt);
        rec(*f.right, std::nullopt);
        return;
      case FormulaKind::Or: {
        const int g = group ? *group : next_group++;
        rec(*f.left, g);
        rec(*f.right, g);
        return;
      }
      case FormulaKind::Implies: {
        if (f.left->kind != FormulaKind::Predicate)
          throw Intractable("implication antecedent must be a time-0 predicate");
        if (group) throw Intractable("implication inside a disjunction is not atomic");
        residuals.push_back(f.left);
        if (f.left->field(x0) >= 0.0) rec(*f.right, std::nullopt);
        return;
      }
    }
  }
};

}  // namespace

Decomposition decompose(const Formula& f, const Eigen::VectorXd& x0) {
  Decomposition d;
  DecomposeState state{d.tasks, d.residual_checks, x0};
  state.rec(f, std::nullopt);
  return d;
}

}  // namespace hoclbf
