#include "hoclbf/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "hoclbf/errors.hpp"

namespace hoclbf {

ExprPtr expr_const(double v) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::Const;
  n->value = v;
  return n;
}

ExprPtr expr_var(int index, std::string name) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::Var;
  n->var_index = index;
  n->name = std::move(name);
  return n;
}

ExprPtr expr_binary(ExprKind kind, ExprPtr l, ExprPtr r) {
  auto n = std::make_shared<ExprNode>();
  n->kind = kind;
  n->lhs = std::move(l);
  n->rhs = std::move(r);
  return n;
}

ExprPtr expr_neg(ExprPtr e) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::Neg;
  n->lhs = std::move(e);
  return n;
}

ExprPtr expr_pow(ExprPtr base, double exponent) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::Pow;
  n->lhs = std::move(base);
  n->value = exponent;
  return n;
}

ExprPtr expr_call(ExprFunc f, ExprPtr arg) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::Call;
  n->func = f;
  n->lhs = std::move(arg);
  return n;
}

ScalarField expr_to_field(ExprPtr e, int order) {
  return ScalarField::from(
      [e]<class Span>(Span x) { return eval_expr(*e, x); }, order);
}

namespace {

int precedence(const ExprNode& e) {
  switch (e.kind) {
    case ExprKind::Add:
    case ExprKind::Sub: return 1;
    case ExprKind::Mul:
    case ExprKind::Div: return 2;
    case ExprKind::Neg: return 3;
    case ExprKind::Pow: return 4;
    default: return 5;
  }
}

std::string number_text(double v) {
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, end);
}

void print_rec(const ExprNode& e, std::ostringstream& out) {
  auto child = [&](const ExprNode& c, bool need_parens) {
    if (need_parens) out << '(';
    print_rec(c, out);
    if (need_parens) out << ')';
  };
  const int prec = precedence(e);
  switch (e.kind) {
    case ExprKind::Const:
      if (e.value < 0) {
        out << '(' << number_text(e.value) << ')';
      } else {
        out << number_text(e.value);
      }
      break;
    case ExprKind::Var: out << e.name; break;
    case ExprKind::Add:
      child(*e.lhs, precedence(*e.lhs) < prec);
      out << " + ";
      child(*e.rhs, precedence(*e.rhs) <= prec);
      break;
    case ExprKind::Sub:
      child(*e.lhs, precedence(*e.lhs) < prec);
      out << " - ";
      child(*e.rhs, precedence(*e.rhs) <= prec);
      break;
    case ExprKind::Mul:
      child(*e.lhs, precedence(*e.lhs) < prec);
      out << " * ";
      child(*e.rhs, precedence(*e.rhs) <= prec);
      break;
    case ExprKind::Div:
      child(*e.lhs, precedence(*e.lhs) < prec);
      out << " / ";
      child(*e.rhs, precedence(*e.rhs) <= prec);
      break;
    case ExprKind::Neg:
      out << '-';
      child(*e.lhs, precedence(*e.lhs) < prec);
      break;
    case ExprKind::Pow:
      child(*e.lhs, precedence(*e.lhs) <= prec);
      out << '^' << number_text(e.value);
      break;
    case ExprKind::Call:
      switch (e.func) {
        case ExprFunc::Sin: out << "sin"; break;
        case ExprFunc::Cos: out << "cos"; break;
        case ExprFunc::Sqrt: out << "sqrt"; break;
        case ExprFunc::Abs: out << "abs"; break;
      }
      out << '(';
      print_rec(*e.lhs, out);
      out << ')';
      break;
  }
}

}  // namespace

std::string print_expr(const ExprNode& e) {
  std::ostringstream out;
  print_rec(e, out);
  return out.str();
}

bool expr_equal(const ExprNode& a, const ExprNode& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ExprKind::Const: return a.value == b.value;
    case ExprKind::Var: return a.var_index == b.var_index;
    case ExprKind::Pow:
      return a.value == b.value && expr_equal(*a.lhs, *b.lhs);
    case ExprKind::Neg: return expr_equal(*a.lhs, *b.lhs);
    case ExprKind::Call: return a.func == b.func && expr_equal(*a.lhs, *b.lhs);
    default: return expr_equal(*a.lhs, *b.lhs) && expr_equal(*a.rhs, *b.rhs);
  }
}

// ------------------------------------------------------------
// Recursive-descent expression parser.
// ------------------------------------------------------------

namespace {

struct ExprParser {
  const std::string& text;
  size_t pos = 0;
  const std::vector<std::string>& vars;
  const std::map<std::string, ExprPtr>& bindings;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& expected) {
    throw SyntaxError(pos, expected, text);
  }

  double number() {
    skip_ws();
    double v = 0.0;
    auto [end, ec] = std::from_chars(text.data() + pos, text.data() + text.size(), v);
    if (ec != std::errc{} || end == text.data() + pos) fail("a number");
    pos = static_cast<size_t>(end - text.data());
    return v;
  }

  std::string identifier() {
    skip_ws();
    size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      ++pos;
    if (pos == start) fail("an identifier");
    return text.substr(start, pos - start);
  }

  ExprPtr expr() {
    ExprPtr e = term();
    for (;;) {
      skip_ws();
      if (eat('+')) e = expr_binary(ExprKind::Add, e, term());
      else if (eat('-')) e = expr_binary(ExprKind::Sub, e, term());
      else return e;
    }
  }

  ExprPtr term() {
    ExprPtr e = factor();
    for (;;) {
      skip_ws();
      if (eat('*')) e = expr_binary(ExprKind::Mul, e, factor());
      else if (eat('/')) e = expr_binary(ExprKind::Div, e, factor());
      else return e;
    }
  }

  ExprPtr factor() {
    skip_ws();
    if (eat('-')) return expr_neg(factor());
    return power();
  }

  ExprPtr power() {
    ExprPtr base = atom();
    skip_ws();
    if (eat('^')) {
      // Exponents are constants; a parenthesized constant expression such as
      // (1/3) is folded at parse time.
      double q = constant_exponent();
      return expr_pow(base, q);
    }
    return base;
  }

  double constant_exponent() {
    skip_ws();
    if (eat('(')) {
      double v = constant_value();
      if (!eat(')')) fail("')'");
      return v;
    }
    bool negative = eat('-');
    double v = number();
    return negative ? -v : v;
  }

  double constant_value() {
    bool negative = eat('-');
    double v = number();
    if (negative) v = -v;
    skip_ws();
    if (eat('/')) {
      double d = number();
      v /= d;
    }
    return v;
  }

  ExprPtr atom() {
    skip_ws();
    if (pos >= text.size()) fail("an operand");
    if (eat('(')) {
      ExprPtr e = expr();
      if (!eat(')')) fail("')'");
      return e;
    }
    const char c = text[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      return expr_const(number());
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t id_pos = pos;
      std::string id = identifier();
      if (id == "not") throw NegationUnsupported("negation is not part of this logic");
      skip_ws();
      if (pos < text.size() && text[pos] == '(') {
        ++pos;
        ExprPtr arg = expr();
        if (!eat(')')) fail("')'");
        if (id == "sin") return expr_call(ExprFunc::Sin, arg);
        if (id == "cos") return expr_call(ExprFunc::Cos, arg);
        if (id == "sqrt") return expr_call(ExprFunc::Sqrt, arg);
        if (id == "abs") return expr_call(ExprFunc::Abs, arg);
        throw SyntaxError(id_pos, "a known function (sin, cos, sqrt, abs)", text);
      }
      for (size_t i = 0; i < vars.size(); ++i) {
        if (vars[i] == id) return expr_var(static_cast<int>(i), id);
      }
      if (auto it = bindings.find(id); it != bindings.end()) return it->second;
      throw SyntaxError(id_pos, "a declared variable or named predicate", text);
    }
    if (c == '!') throw NegationUnsupported("negation is not part of this logic");
    fail("an operand");
  }
};

}  // namespace

ExprPtr parse_expression(const std::string& text, const std::vector<std::string>& vars,
                         const std::map<std::string, ExprPtr>& bindings) {
  ExprParser p{text, 0, vars, bindings};
  ExprPtr e = p.expr();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("end of expression");
  return e;
}

}  // namespace hoclbf
