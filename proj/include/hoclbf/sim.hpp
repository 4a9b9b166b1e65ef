#pragma once

#include <Eigen/Core>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hoclbf/qp.hpp"
#include "hoclbf/scheduler.hpp"
#include "hoclbf/stl.hpp"

namespace hoclbf {

enum class Integrator { RK4, RK45 };

struct Scenario {
  std::string name = "scenario";
  AffineSystem system;
  std::vector<std::string> state_vars;
  Eigen::VectorXd x0;
  FormulaPtr formula;             // null when tasks are given directly
  std::vector<AtomicTask> tasks;  // explicit task list (alternative to formula)
  std::map<std::string, ExplicitChain> explicit_chains;  // by task id
  double T = 30.0;
  double dt = 0.1;
  Integrator integrator = Integrator::RK4;
  SchedulerConfig scheduler;
  unsigned seed = 0;
};

struct TaskTrace {
  std::string id;
  std::string pred_text;
  int m = 1;
  // psi[k] holds psi_0..psi_{m-1} at sample k; NaN while the task has no
  // active chain.
  std::vector<Eigen::VectorXd> psi;
  std::vector<double> slack;
};

struct RunRecord {
  std::string scenario_name;
  std::vector<std::string> state_vars;
  SampledTrajectory trajectory;
  std::vector<TaskTrace> task_traces;
  std::vector<std::string> events;
  int qp_solves = 0;
  int qp_infeasible = 0;
  long qp_iterations = 0;
  int safety_row_relaxations = 0;  // slacks ever assigned to Class-2 rows
  bool stl_evaluated = false;
  bool stl_satisfied = false;
  // Sign-change counts per task and psi level, computed over active samples.
  std::map<std::string, std::vector<int>> chattering;
};

// One zero-order-hold integration step of x' = f(x) + g(x) u over dt.
// RK4 takes a single fourth-order step; RK45 runs embedded Dormand-Prince
// substeps with absolute/relative tolerance 1e-8 inside the interval.
Eigen::VectorXd integrate_step(const AffineSystem& sys, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& u, double dt, Integrator method);

// Closed loop: activate -> plan -> rows -> resolve conflicts -> assemble ->
// solve -> hold the control over the step -> integrate -> update tasks.
// Infeasible steps hold the previous control and are logged, not thrown.
RunRecord run(const Scenario& scenario);

// Number of sign changes in a sampled trace, ignoring a deadband around
// zero; NaN entries (inactive stretches) are skipped.
int detect_chattering(std::span<const double> trace, double deadband = 1e-4);

}  // namespace hoclbf
