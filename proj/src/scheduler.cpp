#include "hoclbf/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "hoclbf/errors.hpp"
#include "hoclbf/lie.hpp"
#include "hoclbf/log.hpp"

namespace hoclbf {

namespace {

constexpr double kTimeTol = 1e-9;
constexpr double kPlanPMin = 1e-4;
constexpr double kPlanPMax = 1e6;

std::string fmt_time(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", t);
  return buf;
}

std::string fmt_val(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

Scheduler::Scheduler(AffineSystem sys, SchedulerConfig cfg, std::vector<AtomicTask> tasks,
                     std::map<std::string, ExplicitChain> explicit_chains)
    : sys_(std::move(sys)), cfg_(std::move(cfg)), explicit_chains_(std::move(explicit_chains)) {
  runtimes_.reserve(tasks.size());
  for (auto& t : tasks) {
    TaskRuntime rt;
    rt.task = std::move(t);
    runtimes_.push_back(std::move(rt));
  }
}

void Scheduler::log_event(double t, const std::string& task, const std::string& event,
                          const std::string& detail) {
  events_.push_back("t=" + fmt_time(t) + " task=" + task + " event=" + event +
                    " detail=" + detail);
}

void Scheduler::resolve_degrees(const Eigen::VectorXd& x0, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::vector<Eigen::VectorXd> samples;
  samples.push_back(x0);
  for (int i = 0; i < 24; ++i) {
    Eigen::VectorXd s = x0;
    for (int j = 0; j < s.size(); ++j) s[j] += 3.0 * jitter(rng);
    samples.push_back(s);
  }
  for (auto& rt : runtimes_) {
    if (auto it = explicit_chains_.find(rt.task.id); it != explicit_chains_.end()) {
      rt.m = static_cast<int>(it->second.p.size());
      continue;
    }
    if (auto it = cfg_.relative_degree.find(rt.task.id); it != cfg_.relative_degree.end()) {
      rt.m = it->second;
      continue;
    }
    rt.m = 0;
    for (int m = 1; m <= kMaxJetDepth; ++m) {
      if (check_relative_degree(rt.task.predicate, sys_, m, samples)) {
        rt.m = m;
        break;
      }
    }
    if (rt.m == 0)
      throw std::invalid_argument("could not determine the relative degree of task " +
                                  rt.task.id);
  }
}

double Scheduler::planned_gain(double psi_level, double slot, double q) const {
  // Inverts the finite-time bound so it lands at slot * safety_factor:
  // p = |psi|^{1-q} / (slot (1-q) safety_factor).
  double p = std::pow(std::abs(psi_level), 1.0 - q) /
             (slot * (1.0 - q) * cfg_.budget_safety_factor);
  if (p < kPlanPMin || p > kPlanPMax) {
    log_warn("planned gain " + fmt_val(p) + " clamped");
    p = std::clamp(p, kPlanPMin, kPlanPMax);
  }
  return p;
}

void Scheduler::plan_parameters(TaskRuntime& rt, double t, const Eigen::VectorXd& x) const {
  BarrierChain& chain = *rt.chain;
  const int m0 = chain.m0();
  const double deadline = rt.task.deadline();
  const double remaining = deadline - t;
  const double slot = remaining / m0;
  rt.budget.assign(static_cast<size_t>(m0), slot);
  rt.plan_time = t;

  const Eigen::VectorXd pure = lie_derivatives(chain.predicate(), sys_, x, m0 - 1);
  const double q = cfg_.default_q_class1;
  const double p = planned_gain(pure[m0 - 1], slot, q);
  rt.chain = chain.with_level(m0, ClassKSpec{p, q, PowerForm::SignedPower});
}

void Scheduler::build_chain(TaskRuntime& rt, double t, const Eigen::VectorXd& x) const {
  if (auto it = explicit_chains_.find(rt.task.id); it != explicit_chains_.end()) {
    const ExplicitChain& ec = it->second;
    std::vector<ClassKSpec> levels(ec.p.size());
    for (size_t i = 0; i < ec.p.size(); ++i) {
      levels[i] = ClassKSpec{ec.p[i], ec.q[i],
                             ec.forms.empty() ? PowerForm::SignedPower : ec.forms[i]};
    }
    BarrierChain chain(rt.task.predicate, levels, ChainMode::Class2);
    chain = chain.with_mode(classify(chain));
    if (chain.mode() == ChainMode::Class1 && chain.degree() > 1) {
      const Eigen::VectorXd pure =
          lie_derivatives(chain.predicate(), sys_, x, chain.degree() - 1);
      chain = chain.with_m0(compute_m0(pure.tail(chain.degree() - 1), chain.degree()));
    }
    rt.chain = chain;
    return;
  }

  const int m = rt.m;
  const double bval = rt.task.predicate(x);
  if (bval >= 0.0) {
    // Predicate already satisfied: forward-invariance chain.
    std::vector<double> gains(static_cast<size_t>(m), cfg_.default_p_class2);
    if (auto it = cfg_.class2_gains.find(rt.task.id); it != cfg_.class2_gains.end()) {
      gains = it->second;
      gains.resize(static_cast<size_t>(m), cfg_.default_p_class2);
    }
    std::vector<ClassKSpec> levels(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i)
      levels[static_cast<size_t>(i)] =
          ClassKSpec{gains[static_cast<size_t>(i)], cfg_.default_q_class2,
                     PowerForm::SignedPower};
    rt.chain = BarrierChain(rt.task.predicate, levels, ChainMode::Class2);
    return;
  }

  // Unsatisfied predicate: staged Class-1 chain. Levels below m0 are plain
  // derivatives, the m0 level carries the finite-time term, levels above it
  // the class-2 terms.
  const Eigen::VectorXd pure = lie_derivatives(rt.task.predicate, sys_, x, m - 1);
  const int m0 = m > 1 ? compute_m0(pure.tail(m - 1), m) : 1;
  std::vector<ClassKSpec> levels(static_cast<size_t>(m));
  for (int i = 1; i <= m; ++i) {
    if (i < m0) {
      levels[static_cast<size_t>(i - 1)] = ClassKSpec{0.0, 1.0, PowerForm::SignedPower};
    } else if (i == m0) {
      levels[static_cast<size_t>(i - 1)] =
          ClassKSpec{1.0, cfg_.default_q_class1, PowerForm::SignedPower};  // planned below
    } else {
      levels[static_cast<size_t>(i - 1)] =
          ClassKSpec{cfg_.default_p_class2, cfg_.default_q_class2, PowerForm::SignedPower};
    }
  }
  rt.chain = BarrierChain(rt.task.predicate, levels, ChainMode::Class1,
                          ChainStructure::GStructure, m0);
  plan_parameters(rt, t, x);
}

void Scheduler::activate(double t, const Eigen::VectorXd& x) {
  for (auto& rt : runtimes_) {
    if (rt.state != TaskState::Pending) continue;
    const bool in_horizon =
        rt.task.t_a <= t + cfg_.horizon + kTimeTol && rt.task.t_b >= t - kTimeTol;
    if (!in_horizon) continue;

    const double bval = rt.task.predicate(x);
    if (rt.task.kind == TaskKind::F && bval >= 0.0 && t >= rt.task.t_a - kTimeTol &&
        t <= rt.task.t_b + kTimeTol) {
      rt.state = TaskState::Satisfied;
      log_event(t, rt.task.id, "Activated", "satisfied on activation");
      log_event(t, rt.task.id, "Satisfied", "b=" + fmt_val(bval));
      continue;
    }
    if (bval < 0.0 && rt.task.deadline() <= t + kTimeTol &&
        explicit_chains_.find(rt.task.id) == explicit_chains_.end()) {
      rt.state = TaskState::Expired;
      rt.violated = true;
      log_event(t, rt.task.id, "Expired",
                "DeadlineUnreachable: deadline=" + fmt_val(rt.task.deadline()) +
                    " b=" + fmt_val(bval));
      continue;
    }
    build_chain(rt, t, x);
    rt.state = TaskState::Active;
    const char* cls = rt.chain->mode() == ChainMode::Class1 ? "Class1" : "Class2";
    log_event(t, rt.task.id, "Activated",
              std::string(cls) + " m=" + std::to_string(rt.chain->degree()) +
                  " m0=" + std::to_string(rt.chain->m0()) + " b=" + fmt_val(bval));
  }
}

std::vector<ConstraintRow> Scheduler::constraint_rows(double t, const Eigen::VectorXd& x) {
  std::vector<ConstraintRow> rows;
  for (auto& rt : runtimes_) {
    if (rt.state != TaskState::Active || !rt.chain) continue;
    try {
      rows.push_back(constraint_row(*rt.chain, sys_, x, rt.task.id));
    } catch (const DegenerateRow& e) {
      log_event(t, rt.task.id, "ViolationDetected",
                std::string("degenerate row skipped: ") + e.what());
    }
  }
  return rows;
}

std::vector<std::optional<int>> Scheduler::resolve_conflicts(
    const std::vector<ConstraintRow>& rows, double t, const Eigen::VectorXd& x) {
  (void)t;
  std::vector<std::optional<int>> assignment(rows.size());
  for (auto& rt : runtimes_) rt.slack_index.reset();

  auto runtime_of = [&](const std::string& id) -> TaskRuntime* {
    for (auto& rt : runtimes_)
      if (rt.task.id == id) return &rt;
    return nullptr;
  };

  // Disjunction groups: keep the member with the largest current barrier
  // value hard, relax the rest regardless of class mode (an alternative is
  // not a safety requirement), except that a Class-2 chain stays hard.
  std::map<int, std::vector<size_t>> groups;
  for (size_t i = 0; i < rows.size(); ++i) {
    TaskRuntime* rt = runtime_of(rows[i].owner);
    if (rt && rt->task.disjunction_group) groups[*rt->task.disjunction_group].push_back(i);
  }
  std::vector<bool> relax(rows.size(), false);
  std::vector<bool> grouped(rows.size(), false);
  for (auto& [gid, members] : groups) {
    (void)gid;
    size_t best = members.front();
    double best_val = runtime_of(rows[best].owner)->task.predicate(x);
    for (size_t k = 1; k < members.size(); ++k) {
      const double v = runtime_of(rows[members[k]].owner)->task.predicate(x);
      if (v > best_val) {
        best = members[k];
        best_val = v;
      }
    }
    for (size_t i : members) {
      grouped[i] = true;
      if (i == best) continue;
      TaskRuntime* rt = runtime_of(rows[i].owner);
      if (rt->chain && rt->chain->mode() != ChainMode::Class1) {
        log_warn("group member " + rows[i].owner + " held (Class-2 chain not relaxed)");
        continue;
      }
      relax[i] = true;
    }
  }
  for (size_t i = 0; i < rows.size(); ++i) {
    if (!grouped[i] && rows[i].relaxable) relax[i] = true;
  }

  // Dense slack indices ordered by descending window start, ties by id.
  std::vector<size_t> order;
  for (size_t i = 0; i < rows.size(); ++i)
    if (relax[i]) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    TaskRuntime* ra = runtime_of(rows[a].owner);
    TaskRuntime* rb = runtime_of(rows[b].owner);
    const double ka = ra ? ra->task.priority_key() : 0.0;
    const double kb = rb ? rb->task.priority_key() : 0.0;
    if (ka != kb) return ka > kb;
    return rows[a].owner < rows[b].owner;
  });
  int next = 0;
  for (size_t i : order) {
    assignment[i] = next;
    if (TaskRuntime* rt = runtime_of(rows[i].owner)) rt->slack_index = next;
    ++next;
  }
  return assignment;
}

void Scheduler::note_slacks(const Eigen::VectorXd& z, int control_dim) {
  for (auto& rt : runtimes_) {
    if (!rt.slack_index) {
      rt.last_slack = 0.0;
      continue;
    }
    rt.last_slack = z[control_dim + *rt.slack_index];
  }
}

void Scheduler::revalidate_budget(TaskRuntime& rt, double t, const Eigen::VectorXd& x) {
  if (!rt.chain || rt.chain->mode() != ChainMode::Class1) return;
  const BarrierChain& chain = *rt.chain;
  const int m0 = chain.m0();
  const ClassKSpec& lv = chain.level(m0);
  if (!(lv.q > 0.0 && lv.q < 1.0)) return;
  const Eigen::VectorXd pure = lie_derivatives(chain.predicate(), sys_, x, m0 - 1);
  const double remaining = rt.task.deadline() - t;
  const double bound = finite_time_bound(pure[m0 - 1], lv.p, lv.q);
  if (bound <= remaining + kTimeTol) return;
  // Current gains no longer meet the deadline: re-plan with the full
  // remaining time as one slot.
  if (remaining <= 0.0) {
    log_event(t, rt.task.id, "DeadlineAtRisk",
              "no budget left after relaxation, bound=" + fmt_val(bound));
    return;
  }
  const double p = planned_gain(pure[m0 - 1], remaining, lv.q);
  rt.chain = chain.with_level(m0, ClassKSpec{p, lv.q, PowerForm::SignedPower});
  rt.budget.assign(1, remaining);
  rt.plan_time = t;
  const double new_bound = finite_time_bound(pure[m0 - 1], p, lv.q);
  if (new_bound > remaining + kTimeTol) {
    log_event(t, rt.task.id, "DeadlineAtRisk",
              "replanned bound " + fmt_val(new_bound) + " exceeds remaining " +
                  fmt_val(remaining));
  }
}

void Scheduler::step_update(double t, const Eigen::VectorXd& x) {
  // Disjunction groups are dissolved as soon as any member's predicate is
  // non-negative inside that member's own window.
  std::map<int, bool> group_satisfied;
  for (auto& rt : runtimes_) {
    if (rt.state != TaskState::Active || !rt.task.disjunction_group) continue;
    const double bval = rt.task.predicate(x);
    if (bval >= 0.0 && t >= rt.task.t_a - kTimeTol && t <= rt.effective_t_b() + kTimeTol)
      group_satisfied[*rt.task.disjunction_group] = true;
  }
  for (auto& rt : runtimes_) {
    if (rt.state != TaskState::Active || !rt.task.disjunction_group) continue;
    if (group_satisfied.count(*rt.task.disjunction_group)) {
      rt.state = TaskState::Satisfied;
      rt.chain.reset();
      log_event(t, rt.task.id, "Satisfied", "disjunction group satisfied");
    }
  }

  for (auto& rt : runtimes_) {
    if (rt.state != TaskState::Active) continue;
    const double bval = rt.task.predicate(x);

    if (rt.task.kind == TaskKind::F) {
      if (bval >= 0.0 && t >= rt.task.t_a - kTimeTol && t <= rt.task.t_b + kTimeTol) {
        rt.state = TaskState::Satisfied;
        rt.chain.reset();
        log_event(t, rt.task.id, "Satisfied", "b=" + fmt_val(bval));
        // Close the G segment of an until pair at this instant.
        for (auto& other : runtimes_) {
          if (other.task.until_partner && *other.task.until_partner == rt.task.id)
            other.g_end_override = t;
        }
        continue;
      }
      if (t > rt.task.t_b + kTimeTol) {
        rt.state = TaskState::Expired;
        rt.violated = true;
        rt.chain.reset();
        log_event(t, rt.task.id, "ViolationDetected", "window closed unsatisfied");
        log_event(t, rt.task.id, "Expired", "unsatisfied");
        continue;
      }
      if (bval >= cfg_.eps_switch && t < rt.task.t_a && !rt.early_class2 &&
          cfg_.enable_switch && rt.chain && rt.chain->mode() == ChainMode::Class1) {
        BarrierChain switched =
            switch_update(*rt.chain, sys_, x, cfg_.eps_switch, cfg_.default_q_class2);
        rt.chain = switched;
        rt.early_class2 = true;
        log_event(t, rt.task.id, "Switched", "predicate held before window; holding");
        continue;
      }
    } else {
      // G task bookkeeping.
      const double window_end = rt.effective_t_b();
      const bool in_window = t >= rt.task.t_a - kTimeTol && t <= window_end + kTimeTol;
      if (in_window && bval < -cfg_.violation_tol) {
        rt.violated = true;
        if (!rt.in_violation) {
          rt.in_violation = true;
          log_event(t, rt.task.id, "ViolationDetected", "b=" + fmt_val(bval));
        }
      } else if (rt.in_violation && bval >= 0.0) {
        rt.in_violation = false;
      }
      if (t > window_end + kTimeTol) {
        rt.state = rt.violated ? TaskState::Expired : TaskState::Satisfied;
        rt.chain.reset();
        log_event(t, rt.task.id, "Expired",
                  rt.violated ? "window closed with violations" : "window closed satisfied");
        continue;
      }
    }

    // Class switching and m0 decrements.
    if (rt.chain && rt.chain->mode() == ChainMode::Class1 && cfg_.enable_switch) {
      const BarrierChain before = *rt.chain;
      BarrierChain updated =
          switch_update(before, sys_, x, cfg_.eps_switch, cfg_.default_q_class2);
      const bool mode_changed = updated.mode() != before.mode();
      const bool m0_changed = updated.m0() != before.m0();
      bool levels_changed = false;
      for (int i = 1; i <= updated.degree(); ++i) {
        if (updated.level(i).p != before.level(i).p ||
            updated.level(i).q != before.level(i).q)
          levels_changed = true;
      }
      if (updated.mode() == ChainMode::Class1 && updated.level(updated.m0()).p == 0.0) {
        // A decrement moved the finite-time slot down a level; re-plan it
        // over the remaining time, split across the levels still waiting.
        rt.chain = updated;
        plan_parameters(rt, t, x);
        updated = *rt.chain;
        levels_changed = true;
      } else {
        rt.chain = updated;
      }
      if (mode_changed) {
        log_event(t, rt.task.id, "Switched", "Class1 -> Class2");
      } else if (m0_changed || levels_changed) {
        if (m0_changed)
          log_event(t, rt.task.id, "Switched",
                    "m0 " + std::to_string(before.m0()) + " -> " +
                        std::to_string(updated.m0()));
      }
    }

    // Relaxation episode closed: re-check the budget.
    if (rt.relax_episode && rt.last_slack > -1e-6) {
      rt.relax_episode = false;
      revalidate_budget(rt, t, x);
    }
    if (rt.last_slack < -1e-6 && !rt.relax_episode) {
      rt.relax_episode = true;
      log_event(t, rt.task.id, "Relaxed", "delta=" + fmt_val(rt.last_slack));
    }
  }
}

BarrierChain Scheduler::preview_chain(const TaskRuntime& rt, double t,
                                      const Eigen::VectorXd& x) const {
  TaskRuntime copy = rt;
  build_chain(copy, t, x);
  return *copy.chain;
}

}  // namespace hoclbf
