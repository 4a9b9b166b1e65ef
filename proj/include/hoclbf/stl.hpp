#pragma once

#include <Eigen/Core>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hoclbf/expr.hpp"
#include "hoclbf/field.hpp"

namespace hoclbf {

// ============================================================
// Negation-free signal temporal logic over sampled trajectories.
// ============================================================

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

enum class FormulaKind { Predicate, And, Or, Implies, Always, Eventually, Until };

struct Formula {
  FormulaKind kind;
  // Predicate payload: satisfied when expr(x) >= 0.
  ExprPtr expr;
  std::string source_text;
  ScalarField field;
  // Temporal interval in seconds (Always / Eventually / Until).
  double t_a = 0.0, t_b = 0.0;
  FormulaPtr left, right;  // unary operators use `left` only
};

FormulaPtr make_predicate(ExprPtr expr, std::string source_text = "");
FormulaPtr make_binary(FormulaKind kind, FormulaPtr l, FormulaPtr r);
FormulaPtr make_temporal(FormulaKind kind, double t_a, double t_b, FormulaPtr child);
FormulaPtr make_until(double t_a, double t_b, FormulaPtr l, FormulaPtr r);

struct ParseContext {
  std::vector<std::string> state_vars;
  std::map<std::string, ExprPtr> named_predicates;  // inlined on reference
};

// Parses the concrete grammar: G[a,b] / F[a,b] / binary U[a,b], infix
// && || =>, predicates as arithmetic comparisons (>=, <=, >, <; strict
// forms coincide with the non-strict ones under sampled semantics).
FormulaPtr parse(const std::string& text, const ParseContext& ctx);

// Canonical text form; parse(print(f)) is structurally equal to f.
std::string print(const Formula& f);
// Indented AST dump for golden tests.
std::string dump(const Formula& f);
bool formula_equal(const Formula& a, const Formula& b);

// Nesting-sum of interval upper bounds.
double horizon(const Formula& f);

struct SampledTrajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> controls;  // one shorter than states
};

// Boolean satisfaction of f by the trajectory at time t. Quantifiers range
// over recorded samples with interval endpoints snapped outward to the
// enclosing samples. Note: the until operator quantifies its left operand
// over [t_a, t'] with an absolute lower end, not t + t_a.
bool monitor(const SampledTrajectory& traj, const Formula& f, double t);

// ------------------------------------------------------------
// Decomposition into timed atomic G/F tasks.
// ------------------------------------------------------------

enum class TaskKind { G, F };

struct AtomicTask {
  std::string id;
  TaskKind kind = TaskKind::G;
  double t_a = 0.0, t_b = 0.0;
  ScalarField predicate;
  ExprPtr pred_expr;
  std::string pred_text;
  std::optional<int> disjunction_group;
  // For the G segment of an until: id of the paired F task whose first
  // satisfaction instant closes this task's window.
  std::optional<std::string> until_partner;

  double deadline() const { return kind == TaskKind::G ? t_a : t_b; }
  double priority_key() const { return t_a; }
};

struct Decomposition {
  std::vector<AtomicTask> tasks;
  // Time-0 antecedents that were evaluated against x0 during decomposition.
  std::vector<FormulaPtr> residual_checks;
};

// Breaks a negation-free formula into G/F tasks. Implications must have
// time-0 predicate antecedents (evaluated against x0); disjunctions must
// range over atomic formulas and share one disjunction group; nested
// temporal operators are rejected as Intractable.
Decomposition decompose(const Formula& f, const Eigen::VectorXd& x0);

}  // namespace hoclbf
