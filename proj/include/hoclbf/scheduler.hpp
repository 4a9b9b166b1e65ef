#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hoclbf/barrier.hpp"
#include "hoclbf/stl.hpp"

namespace hoclbf {

enum class TaskState { Pending, Active, Satisfied, Expired };

struct SchedulerConfig {
  double horizon = 10.0;  // receding horizon H, seconds
  double default_q_class1 = 1.0 / 3.0;
  double default_q_class2 = 1.0;
  double default_p_class2 = 0.4;
  double budget_safety_factor = 0.9;
  double slack_weight = 1000.0;
  bool enable_switch = true;
  double eps_switch = 1e-3;
  double violation_tol = 1e-3;
  // Per task id: pinned relative degree (otherwise probed numerically).
  std::map<std::string, int> relative_degree;
  // Per task id: gains for chains built in Class-2 mode (one per level).
  std::map<std::string, std::vector<double>> class2_gains;
};

// Fully pinned chain parameters for a task (used by scenario files that
// bypass planning, e.g. fixed-gain study runs).
struct ExplicitChain {
  std::vector<double> p, q;
  std::vector<PowerForm> forms;  // empty = all SignedPower
};

struct TaskRuntime {
  AtomicTask task;
  int m = 1;  // relative degree of the predicate
  TaskState state = TaskState::Pending;
  std::optional<BarrierChain> chain;
  std::vector<double> budget;  // current partition of [plan time, deadline]
  double plan_time = 0.0;
  std::optional<int> slack_index;  // slack assigned in the current step
  double last_slack = 0.0;
  bool relax_episode = false;
  bool violated = false;
  bool in_violation = false;   // inside a violation episode (for logging)
  bool early_class2 = false;   // F predicate held before its window opened
  std::optional<double> g_end_override;  // until partner satisfaction instant
  double effective_t_b() const { return g_end_override.value_or(task.t_b); }
};

// Owns task lifecycle over a run: activation within the receding horizon,
// chain construction and gain planning, class switching, m0 decrements,
// satisfaction/expiry, and slack assignment for conflicting predicates.
// Confined to the simulation loop's thread.
class Scheduler {
public:
  Scheduler(AffineSystem sys, SchedulerConfig cfg, std::vector<AtomicTask> tasks,
            std::map<std::string, ExplicitChain> explicit_chains = {});

  // Resolves relative degrees (pinned or probed around x0) before a run.
  void resolve_degrees(const Eigen::VectorXd& x0, unsigned seed = 12345);

  // Moves Pending tasks whose window intersects [t, t+H] to Active and
  // builds their chains.
  void activate(double t, const Eigen::VectorXd& x);

  // Constraint rows of all active chains at the current state; rows whose
  // control coefficient degenerates are skipped with a logged event.
  std::vector<ConstraintRow> constraint_rows(double t, const Eigen::VectorXd& x);

  // Assigns dedicated slack variables: every Class-1 row, ordered by
  // descending t_a (ties by id), and every disjunction-group member except
  // the one with the largest current barrier value. Class-2 safety rows are
  // never relaxed. Returns one entry per row.
  std::vector<std::optional<int>> resolve_conflicts(const std::vector<ConstraintRow>& rows,
                                                    double t, const Eigen::VectorXd& x);

  // Records the solved slack values (z = control stacked with slacks) so
  // relaxation episodes can be tracked across steps.
  void note_slacks(const Eigen::VectorXd& z, int control_dim);

  // Post-integration update at the new state: violations, switches, m0
  // decrements with re-planning, satisfaction, expiry, group removal, and
  // budget re-validation after relaxation episodes.
  void step_update(double t, const Eigen::VectorXd& x);

  const std::vector<TaskRuntime>& runtimes() const { return runtimes_; }
  const std::vector<std::string>& events() const { return events_; }
  // Lets the simulation loop record its own events (e.g. infeasible steps)
  // in the same ordered stream.
  void append_event(double t, const std::string& task, const std::string& event,
                    const std::string& detail) {
    log_event(t, task, event, detail);
  }
  const SchedulerConfig& config() const { return cfg_; }
  const AffineSystem& system() const { return sys_; }

  // Hypothetical plan of a task at (t, x) without mutating it; used by the
  // describe command.
  BarrierChain preview_chain(const TaskRuntime& rt, double t,
                             const Eigen::VectorXd& x) const;

private:
  void build_chain(TaskRuntime& rt, double t, const Eigen::VectorXd& x) const;
  void plan_parameters(TaskRuntime& rt, double t, const Eigen::VectorXd& x) const;
  void revalidate_budget(TaskRuntime& rt, double t, const Eigen::VectorXd& x);
  double planned_gain(double psi_level, double slot, double q) const;
  void log_event(double t, const std::string& task, const std::string& event,
                 const std::string& detail);

  AffineSystem sys_;
  SchedulerConfig cfg_;
  std::vector<TaskRuntime> runtimes_;
  std::map<std::string, ExplicitChain> explicit_chains_;
  std::vector<std::string> events_;
};

}  // namespace hoclbf
