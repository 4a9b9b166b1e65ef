#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstring>
#include <sstream>

#include "hoclbf/errors.hpp"
#include "hoclbf/stl.hpp"

namespace hoclbf {

FormulaPtr make_predicate(ExprPtr expr, std::string source_text) {
  auto f = std::make_shared<Formula>();
  f->kind = FormulaKind::Predicate;
  f->field = expr_to_field(expr);
  if (source_text.empty()) source_text = print_expr(*expr) + " >= 0";
  f->source_text = std::move(source_text);
  f->expr = std::move(expr);
  return f;
}

FormulaPtr make_binary(FormulaKind kind, FormulaPtr l, FormulaPtr r) {
  auto f = std::make_shared<Formula>();
  f->kind = kind;
  f->left = std::move(l);
  f->right = std::move(r);
  return f;
}

FormulaPtr make_temporal(FormulaKind kind, double t_a, double t_b, FormulaPtr child) {
  if (t_a < 0.0 || t_b < t_a)
    throw BadInterval("interval [" + std::to_string(t_a) + ", " + std::to_string(t_b) +
                      "] must satisfy 0 <= t_a <= t_b");
  auto f = std::make_shared<Formula>();
  f->kind = kind;
  f->t_a = t_a;
  f->t_b = t_b;
  f->left = std::move(child);
  return f;
}

FormulaPtr make_until(double t_a, double t_b, FormulaPtr l, FormulaPtr r) {
  if (t_a < 0.0 || t_b < t_a)
    throw BadInterval("interval [" + std::to_string(t_a) + ", " + std::to_string(t_b) +
                      "] must satisfy 0 <= t_a <= t_b");
  auto f = std::make_shared<Formula>();
  f->kind = FormulaKind::Until;
  f->t_a = t_a;
  f->t_b = t_b;
  f->left = std::move(l);
  f->right = std::move(r);
  return f;
}

namespace {

struct StlParser {
  const std::string& text;
  const ParseContext& ctx;
  size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  bool at(const char* s) {
    skip_ws();
    size_t len = std::strlen(s);
    return text.compare(pos, len, s) == 0;
  }

  bool eat(const char* s) {
    if (at(s)) {
      pos += std::strlen(s);
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& expected) {
    throw SyntaxError(pos, expected, text);
  }

  void check_negation() {
    skip_ws();
    if (pos < text.size() && text[pos] == '!')
      throw NegationUnsupported("negation is not part of this logic");
    if (text.compare(pos, 3, "not") == 0 &&
        (pos + 3 == text.size() ||
         !std::isalnum(static_cast<unsigned char>(text[pos + 3]))))
      throw NegationUnsupported("negation is not part of this logic");
  }

  double number() {
    skip_ws();
    double v = 0.0;
    auto [end, ec] = std::from_chars(text.data() + pos, text.data() + text.size(), v);
    if (ec != std::errc{} || end == text.data() + pos) fail("a number");
    pos = static_cast<size_t>(end - text.data());
    return v;
  }

  std::pair<double, double> interval() {
    if (!eat("[")) fail("'['");
    double a = number();
    if (!eat(",")) fail("','");
    double b = number();
    if (!eat("]")) fail("']'");
    if (b < a) throw BadInterval("interval [" + std::to_string(a) + ", " +
                                 std::to_string(b) + "] has t_a > t_b");
    return {a, b};
  }

  FormulaPtr formula() { return implies(); }

  FormulaPtr implies() {
    FormulaPtr l = or_level();
    if (eat("=>")) return make_binary(FormulaKind::Implies, l, implies());
    return l;
  }

  FormulaPtr or_level() {
    FormulaPtr l = and_level();
    while (eat("||")) l = make_binary(FormulaKind::Or, l, and_level());
    return l;
  }

  FormulaPtr and_level() {
    FormulaPtr l = until_level();
    while (eat("&&")) l = make_binary(FormulaKind::And, l, until_level());
    return l;
  }

  FormulaPtr until_level() {
    FormulaPtr l = unary();
    skip_ws();
    if (pos < text.size() && text[pos] == 'U' && pos + 1 < text.size() &&
        text[pos + 1] == '[') {
      ++pos;
      auto [a, b] = interval();
      FormulaPtr r = unary();
      return make_until(a, b, l, r);
    }
    return l;
  }

  bool at_temporal(char op) {
    skip_ws();
    return pos + 1 < text.size() && text[pos] == op && text[pos + 1] == '[';
  }

  FormulaPtr unary() {
    check_negation();
    if (at_temporal('G')) {
      ++pos;
      auto [a, b] = interval();
      return make_temporal(FormulaKind::Always, a, b, unary());
    }
    if (at_temporal('F')) {
      ++pos;
      auto [a, b] = interval();
      return make_temporal(FormulaKind::Eventually, a, b, unary());
    }
    return primary();
  }

  FormulaPtr primary() {
    skip_ws();
    if (pos >= text.size()) fail("a predicate or '('");
    // Either a parenthesized formula or a predicate whose expression may
    // itself start with '('. Try the predicate reading first and fall back.
    const size_t mark = pos;
    try {
      return predicate();
    } catch (const NegationUnsupported&) {
      throw;
    } catch (const SyntaxError&) {
      pos = mark;
    }
    if (eat("(")) {
      FormulaPtr f = formula();
      if (!eat(")")) fail("')'");
      return f;
    }
    fail("a predicate or '('");
  }

  FormulaPtr predicate() {
    skip_ws();
    const size_t start = pos;
    ExprPtr lhs = parse_sub_expression();
    skip_ws();
    ExprPtr e;
    if (eat(">=") || eat(">")) {
      ExprPtr rhs = parse_sub_expression();
      e = normalize(lhs, rhs);
    } else if (eat("<=") || eat("<")) {
      ExprPtr rhs = parse_sub_expression();
      e = normalize(rhs, lhs);
    } else {
      fail("a comparison operator");
    }
    skip_ws();
    return make_predicate(e, text.substr(start, pos - start));
  }

  // lhs >= rhs becomes the single field lhs - rhs >= 0; a literal zero on
  // either side is dropped rather than wrapped in a subtraction.
  static ExprPtr normalize(ExprPtr lhs, ExprPtr rhs) {
    if (rhs->kind == ExprKind::Const && rhs->value == 0.0) return lhs;
    if (lhs->kind == ExprKind::Const && lhs->value == 0.0) return expr_neg(rhs);
    return expr_binary(ExprKind::Sub, lhs, rhs);
  }

  // Runs the arithmetic parser in-place on the remaining text; it consumes
  // as much as forms a valid expression.
  ExprPtr parse_sub_expression();
};

// The expression parser consumes greedily until it cannot continue; reuse it
// by parsing the longest prefix that forms an expression.
struct InlineExprParser {
  const std::string& text;
  size_t& pos;
  const ParseContext& ctx;

  ExprPtr run() {
    // Find the extent this expression can cover: stop before comparison or
    // logical operators at paren depth 0.
    size_t end = pos;
    int depth = 0;
    while (end < text.size()) {
      char c = text[end];
      if (c == '(') ++depth;
      if (c == ')') {
        if (depth == 0) break;
        --depth;
      }
      if (depth == 0) {
        if (c == '>' || c == '<' || c == '=' || c == '&' || c == '|' || c == ',' ||
            c == ']' || c == '!')
          break;
        if (c == 'U' && end + 1 < text.size() && text[end + 1] == '[') break;
      }
      ++end;
    }
    std::string slice = text.substr(pos, end - pos);
    size_t consumed = 0;
    ExprPtr e = parse_prefix(slice, &consumed);
    pos += consumed;
    return e;
  }

  ExprPtr parse_prefix(const std::string& slice, size_t* consumed) {
    // parse_expression demands full consumption; trim trailing whitespace.
    std::string trimmed = slice;
    while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back())))
      trimmed.pop_back();
    ExprPtr e = parse_expression(trimmed, ctx.state_vars, ctx.named_predicates);
    *consumed = trimmed.size();
    return e;
  }
};

ExprPtr StlParser::parse_sub_expression() {
  InlineExprParser p{text, pos, ctx};
  return p.run();
}

}  // namespace

FormulaPtr parse(const std::string& text, const ParseContext& ctx) {
  StlParser p{text, ctx};
  FormulaPtr f = p.formula();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("end of formula");
  return f;
}

// ------------------------------------------------------------
// Printing and structural equality.
// ------------------------------------------------------------

namespace {

int formula_precedence(const Formula& f) {
  switch (f.kind) {
    case FormulaKind::Implies: return 1;
    case FormulaKind::Or: return 2;
    case FormulaKind::And: return 3;
    case FormulaKind::Until: return 4;
    case FormulaKind::Always:
    case FormulaKind::Eventually: return 5;
    case FormulaKind::Predicate: return 6;
  }
  return 6;
}

std::string number_text(double v) {
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, end);
}

void print_rec(const Formula& f, std::ostringstream& out) {
  const int prec = formula_precedence(f);
  auto child = [&](const Formula& c, bool parens_on_equal) {
    bool parens = formula_precedence(c) < prec ||
                  (parens_on_equal && formula_precedence(c) == prec);
    if (parens) out << '(';
    print_rec(c, out);
    if (parens) out << ')';
  };
  switch (f.kind) {
    case FormulaKind::Predicate:
      out << print_expr(*f.expr) << " >= 0";
      break;
    case FormulaKind::And:
      child(*f.left, false);
      out << " && ";
      child(*f.right, true);
      break;
    case FormulaKind::Or:
      child(*f.left, false);
      out << " || ";
      child(*f.right, true);
      break;
    case FormulaKind::Implies:
      child(*f.left, true);
      out << " => ";
      child(*f.right, false);
      break;
    case FormulaKind::Always:
    case FormulaKind::Eventually:
      out << (f.kind == FormulaKind::Always ? 'G' : 'F') << '[' << number_text(f.t_a)
          << ',' << number_text(f.t_b) << "] ";
      child(*f.left, false);
      break;
    case FormulaKind::Until:
      child(*f.left, true);
      out << " U[" << number_text(f.t_a) << ',' << number_text(f.t_b) << "] ";
      child(*f.right, true);
      break;
  }
}

void dump_rec(const Formula& f, int indent, std::ostringstream& out) {
  for (int i = 0; i < indent; ++i) out << "  ";
  switch (f.kind) {
    case FormulaKind::Predicate:
      out << "Predicate " << print_expr(*f.expr) << " >= 0\n";
      return;
    case FormulaKind::And: out << "And\n"; break;
    case FormulaKind::Or: out << "Or\n"; break;
    case FormulaKind::Implies: out << "Implies\n"; break;
    case FormulaKind::Always:
      out << "Always [" << number_text(f.t_a) << ", " << number_text(f.t_b) << "]\n";
      break;
    case FormulaKind::Eventually:
      out << "Eventually [" << number_text(f.t_a) << ", " << number_text(f.t_b) << "]\n";
      break;
    case FormulaKind::Until:
      out << "Until [" << number_text(f.t_a) << ", " << number_text(f.t_b) << "]\n";
      break;
  }
  dump_rec(*f.left, indent + 1, out);
  if (f.right) dump_rec(*f.right, indent + 1, out);
}

}  // namespace

std::string print(const Formula& f) {
  std::ostringstream out;
  print_rec(f, out);
  return out.str();
}

std::string dump(const Formula& f) {
  std::ostringstream out;
  dump_rec(f, 0, out);
  return out.str();
}

bool formula_equal(const Formula& a, const Formula& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case FormulaKind::Predicate: return expr_equal(*a.expr, *b.expr);
    case FormulaKind::Always:
    case FormulaKind::Eventually:
      return a.t_a == b.t_a && a.t_b == b.t_b && formula_equal(*a.left, *b.left);
    case FormulaKind::Until:
      return a.t_a == b.t_a && a.t_b == b.t_b && formula_equal(*a.left, *b.left) &&
             formula_equal(*a.right, *b.right);
    default:
      return formula_equal(*a.left, *b.left) && formula_equal(*a.right, *b.right);
  }
}

double horizon(const Formula& f) {
  switch (f.kind) {
    case FormulaKind::Predicate: return 0.0;
    case FormulaKind::And:
    case FormulaKind::Or:
    case FormulaKind::Implies:
      return std::max(horizon(*f.left), horizon(*f.right));
    case FormulaKind::Always:
    case FormulaKind::Eventually:
      return f.t_b + horizon(*f.left);
    case FormulaKind::Until:
      return f.t_b + std::max(horizon(*f.left), horizon(*f.right));
  }
  return 0.0;
}

}  // namespace hoclbf
