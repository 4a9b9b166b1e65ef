#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hoclbf/field.hpp"

namespace hoclbf {

// ============================================================
// Arithmetic expressions over named state variables. Predicates
// in formulas and scenario files compile to these, and they
// evaluate in dual arithmetic so chains can differentiate them.
// ============================================================

enum class ExprKind { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Call };
enum class ExprFunc { Sin, Cos, Sqrt, Abs };

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  ExprKind kind;
  double value = 0.0;   // Const payload, Pow exponent
  int var_index = -1;   // Var payload
  std::string name;     // Var display name
  ExprFunc func = ExprFunc::Sin;
  ExprPtr lhs, rhs;
};

ExprPtr expr_const(double v);
ExprPtr expr_var(int index, std::string name);
ExprPtr expr_binary(ExprKind kind, ExprPtr l, ExprPtr r);
ExprPtr expr_neg(ExprPtr e);
ExprPtr expr_pow(ExprPtr base, double exponent);
ExprPtr expr_call(ExprFunc f, ExprPtr arg);

template <class T>
T eval_expr(const ExprNode& e, std::span<const T> x) {
  switch (e.kind) {
    case ExprKind::Const: return T(e.value);
    case ExprKind::Var: return x[static_cast<size_t>(e.var_index)];
    case ExprKind::Add: return eval_expr(*e.lhs, x) + eval_expr(*e.rhs, x);
    case ExprKind::Sub: return eval_expr(*e.lhs, x) - eval_expr(*e.rhs, x);
    case ExprKind::Mul: return eval_expr(*e.lhs, x) * eval_expr(*e.rhs, x);
    case ExprKind::Div: return eval_expr(*e.lhs, x) / eval_expr(*e.rhs, x);
    case ExprKind::Neg: return T(0.0) - eval_expr(*e.lhs, x);
    case ExprKind::Pow: return rpow(eval_expr(*e.lhs, x), e.value);
    case ExprKind::Call: {
      T a = eval_expr(*e.lhs, x);
      switch (e.func) {
        case ExprFunc::Sin: return sin(a);
        case ExprFunc::Cos: return cos(a);
        case ExprFunc::Sqrt: return sqrt(a);
        case ExprFunc::Abs: return abs(a);
      }
    }
  }
  throw std::logic_error("unreachable expression kind");
}

ScalarField expr_to_field(ExprPtr e, int order = kMaxJetDepth);

std::string print_expr(const ExprNode& e);
bool expr_equal(const ExprNode& a, const ExprNode& b);

// Arithmetic-expression parser over declared variable names; `bindings`
// provides named sub-expressions that are inlined on reference.
ExprPtr parse_expression(const std::string& text, const std::vector<std::string>& vars,
                         const std::map<std::string, ExprPtr>& bindings = {});

}  // namespace hoclbf
