#include "hoclbf/sim.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "hoclbf/errors.hpp"
#include "hoclbf/log.hpp"

namespace hoclbf {

namespace {

constexpr double kDivergenceNorm = 1e9;

Eigen::VectorXd vector_field(const AffineSystem& sys, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& u) {
  return sys.drift_at(x) + sys.input_at(x) * u;
}

Eigen::VectorXd rk4_step(const AffineSystem& sys, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u, double h) {
  const Eigen::VectorXd k1 = vector_field(sys, x, u);
  const Eigen::VectorXd k2 = vector_field(sys, x + 0.5 * h * k1, u);
  const Eigen::VectorXd k3 = vector_field(sys, x + 0.5 * h * k2, u);
  const Eigen::VectorXd k4 = vector_field(sys, x + h * k3, u);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Dormand-Prince 5(4) with step control, run until the interval is covered.
Eigen::VectorXd rk45_span(const AffineSystem& sys, Eigen::VectorXd x,
                          const Eigen::VectorXd& u, double dt) {
  constexpr double kAbsTol = 1e-8;
  constexpr double kRelTol = 1e-8;
  double t = 0.0;
  double h = dt;
  int guard = 0;
  while (t < dt - 1e-15) {
    if (++guard > 100000) throw StateDiverged("adaptive integrator stalled");
    h = std::min(h, dt - t);
    const Eigen::VectorXd k1 = vector_field(sys, x, u);
    const Eigen::VectorXd k2 = vector_field(sys, x + h * (1.0 / 5.0) * k1, u);
    const Eigen::VectorXd k3 = vector_field(sys, x + h * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2), u);
    const Eigen::VectorXd k4 = vector_field(
        sys, x + h * (44.0 / 45.0 * k1 - 56.0 / 15.0 * k2 + 32.0 / 9.0 * k3), u);
    const Eigen::VectorXd k5 = vector_field(
        sys,
        x + h * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * k2 + 64448.0 / 6561.0 * k3 -
                 212.0 / 729.0 * k4),
        u);
    const Eigen::VectorXd k6 = vector_field(
        sys,
        x + h * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * k2 + 46732.0 / 5247.0 * k3 +
                 49.0 / 176.0 * k4 - 5103.0 / 18656.0 * k5),
        u);
    const Eigen::VectorXd x5 =
        x + h * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * k3 + 125.0 / 192.0 * k4 -
                 2187.0 / 6784.0 * k5 + 11.0 / 84.0 * k6);
    const Eigen::VectorXd k7 = vector_field(sys, x5, u);
    const Eigen::VectorXd x4 =
        x + h * (5179.0 / 57600.0 * k1 + 7571.0 / 16695.0 * k3 + 393.0 / 640.0 * k4 -
                 92097.0 / 339200.0 * k5 + 187.0 / 2100.0 * k6 + 1.0 / 40.0 * k7);
    const double err = (x5 - x4).norm();
    const double tol = kAbsTol + kRelTol * std::max(x.norm(), x5.norm());
    if (err <= tol || h <= 1e-12) {
      t += h;
      x = x5;
    }
    const double factor =
        err > 0.0 ? 0.9 * std::pow(tol / err, 0.2) : 5.0;
    h *= std::clamp(factor, 0.2, 5.0);
  }
  return x;
}

}  // namespace

Eigen::VectorXd integrate_step(const AffineSystem& sys, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& u, double dt, Integrator method) {
  if (dt <= 0.0) throw std::invalid_argument("dt must be positive");
  Eigen::VectorXd next =
      method == Integrator::RK4 ? rk4_step(sys, x, u, dt) : rk45_span(sys, x, u, dt);
  if (!next.allFinite() || next.norm() > kDivergenceNorm)
    throw StateDiverged("state norm exceeded " + std::to_string(kDivergenceNorm));
  return next;
}

int detect_chattering(std::span<const double> trace, double deadband) {
  int count = 0;
  int last_sign = 0;
  for (double v : trace) {
    if (std::isnan(v)) continue;
    if (std::abs(v) <= deadband) continue;
    const int sign = v > 0.0 ? 1 : -1;
    if (last_sign != 0 && sign != last_sign) ++count;
    last_sign = sign;
  }
  return count;
}

RunRecord run(const Scenario& scenario) {
  const AffineSystem& sys = scenario.system;
  const int q = sys.control_dim();
  const int steps = static_cast<int>(std::llround(scenario.T / scenario.dt));
  if (steps <= 0) throw std::invalid_argument("horizon shorter than one control period");

  std::vector<AtomicTask> tasks = scenario.tasks;
  if (scenario.formula) {
    Decomposition d = decompose(*scenario.formula, scenario.x0);
    tasks.insert(tasks.end(), d.tasks.begin(), d.tasks.end());
  }

  SchedulerConfig cfg = scenario.scheduler;
  Scheduler sched(sys, cfg, tasks, scenario.explicit_chains);
  sched.resolve_degrees(scenario.x0);

  RunRecord rec;
  rec.scenario_name = scenario.name;
  rec.state_vars = scenario.state_vars;
  rec.trajectory.times.reserve(static_cast<size_t>(steps) + 1);
  rec.trajectory.states.reserve(static_cast<size_t>(steps) + 1);
  rec.trajectory.controls.reserve(static_cast<size_t>(steps));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& rt : sched.runtimes()) {
    TaskTrace tt;
    tt.id = rt.task.id;
    tt.pred_text = rt.task.pred_text;
    rec.task_traces.push_back(std::move(tt));
  }

  Eigen::VectorXd x = scenario.x0;
  Eigen::VectorXd u_prev = Eigen::VectorXd::Zero(q);

  auto record_sample = [&](double t, const Eigen::VectorXd& state) {
    rec.trajectory.times.push_back(t);
    rec.trajectory.states.push_back(state);
    const auto& rts = sched.runtimes();
    for (size_t i = 0; i < rts.size(); ++i) {
      TaskTrace& tt = rec.task_traces[i];
      const TaskRuntime& rt = rts[i];
      tt.m = std::max(tt.m, rt.m);
      if (rt.state == TaskState::Active && rt.chain) {
        Eigen::VectorXd psis = psi_values(*rt.chain, sys, state);
        Eigen::VectorXd padded = Eigen::VectorXd::Constant(rt.m, nan);
        padded.head(psis.size()) = psis;
        tt.psi.push_back(padded);
        tt.slack.push_back(rt.last_slack);
      } else {
        tt.psi.push_back(Eigen::VectorXd::Constant(std::max(rt.m, 1), nan));
        tt.slack.push_back(0.0);
      }
    }
  };

  for (int k = 0; k < steps; ++k) {
    const double t = k * scenario.dt;
    sched.activate(t, x);
    std::vector<ConstraintRow> rows = sched.constraint_rows(t, x);
    std::vector<std::optional<int>> assignment = sched.resolve_conflicts(rows, t, x);
    for (size_t i = 0; i < rows.size(); ++i) {
      if (assignment[i] && !rows[i].relaxable) ++rec.safety_row_relaxations;
    }
    QpProblem qp = assemble(sys, rows, assignment, cfg.slack_weight);
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(qp.dim);
    warm.head(q) = u_prev;
    QpSolution sol = solve(qp, warm);
    ++rec.qp_solves;
    rec.qp_iterations += sol.iterations;

    Eigen::VectorXd u;
    Eigen::VectorXd z_full = Eigen::VectorXd::Zero(qp.dim);
    if (sol.status == QpStatus::Optimal) {
      u = sol.z.head(q);
      z_full = sol.z;
    } else {
      u = u_prev;
      z_full.head(q) = u;
      ++rec.qp_infeasible;
      sched.append_event(t, "-", "QpInfeasible",
                         "holding previous control, phase1=" +
                             std::to_string(sol.phase1_residual));
    }
    sched.note_slacks(z_full, q);

    record_sample(t, x);
    rec.trajectory.controls.push_back(u);

    x = integrate_step(sys, x, u, scenario.dt, scenario.integrator);
    sched.step_update((k + 1) * scenario.dt, x);
    u_prev = u;
  }
  record_sample(steps * scenario.dt, x);

  rec.events = sched.events();

  // Chattering summary per task and level.
  for (const auto& tt : rec.task_traces) {
    std::vector<int> counts;
    for (int lvl = 0; lvl < tt.m; ++lvl) {
      std::vector<double> series;
      series.reserve(tt.psi.size());
      for (const auto& v : tt.psi)
        series.push_back(lvl < v.size() ? v[lvl] : nan);
      counts.push_back(detect_chattering(series));
    }
    rec.chattering[tt.id] = counts;
  }

  if (scenario.formula) {
    rec.stl_evaluated = true;
    rec.stl_satisfied = monitor(rec.trajectory, *scenario.formula, 0.0);
  } else if (!tasks.empty()) {
    // Explicit task lists are checked against the conjunction of their own
    // quantifiers.
    rec.stl_evaluated = true;
    rec.stl_satisfied = true;
    for (const auto& rt : sched.runtimes()) {
      const AtomicTask& task = rt.task;
      bool ok;
      if (task.kind == TaskKind::G) {
        ok = true;
        for (size_t i = 0; i < rec.trajectory.times.size(); ++i) {
          const double ti = rec.trajectory.times[i];
          if (ti < task.t_a - 1e-9 || ti > task.t_b + 1e-9) continue;
          if (task.predicate(rec.trajectory.states[i]) < 0.0) {
            ok = false;
            break;
          }
        }
      } else {
        ok = false;
        for (size_t i = 0; i < rec.trajectory.times.size(); ++i) {
          const double ti = rec.trajectory.times[i];
          if (ti < task.t_a - 1e-9 || ti > task.t_b + 1e-9) continue;
          if (task.predicate(rec.trajectory.states[i]) >= 0.0) {
            ok = true;
            break;
          }
        }
      }
      if (!ok) rec.stl_satisfied = false;
    }
  }
  return rec;
}

}  // namespace hoclbf
