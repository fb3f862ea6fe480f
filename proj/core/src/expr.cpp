#include "qdi/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>
#include <system_error>
#include <utility>

namespace qdi {

struct ExprNode {
  Op op = Op::Const;
  double value = 0.0;
  Variable var{};
  Expression a{nullptr};
  Expression b{nullptr};
};

namespace {

bool is_unary_func(Op op) {
  switch (op) {
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
    case Op::Log:
    case Op::Sqrt:
    case Op::Abs:
    case Op::Sgn:
      return true;
    default:
      return false;
  }
}

const char* func_name(Op op) {
  switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    case Op::Abs: return "abs";
    case Op::Sgn: return "sgn";
    default: return "?";
  }
}

const char* binary_symbol(Op op) {
  switch (op) {
    case Op::Add: return " + ";
    case Op::Sub: return " - ";
    case Op::Mul: return " * ";
    case Op::Div: return " / ";
    case Op::Pow: return " ^ ";
    default: return " ? ";
  }
}

std::optional<Op> func_from_name(std::string_view name) {
  for (Op op : {Op::Sin, Op::Cos, Op::Exp, Op::Log, Op::Sqrt, Op::Abs, Op::Sgn}) {
    if (name == func_name(op)) return op;
  }
  return std::nullopt;
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v); }

}  // namespace

std::string variable_name(const Variable& v) {
  switch (v.kind) {
    case VarKind::X: return "x" + std::to_string(v.index + 1);
    case VarKind::Psi: return "psi" + std::to_string(v.index + 1);
    case VarKind::U: return "u" + std::to_string(v.index + 1);
    case VarKind::Time: return "t";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Expression

Expression::Expression() {
  static const auto zero = std::make_shared<const ExprNode>();
  node_ = zero;
}

Expression Expression::constant(double value) {
  auto node = std::make_shared<ExprNode>();
  node->op = Op::Const;
  node->value = value;
  return Expression(std::move(node));
}

Expression Expression::variable(Variable v) {
  auto node = std::make_shared<ExprNode>();
  node->op = Op::Var;
  node->var = v;
  return Expression(std::move(node));
}

Expression Expression::unary(Op op, Expression arg) {
  auto node = std::make_shared<ExprNode>();
  node->op = op;
  node->a = std::move(arg);
  return Expression(std::move(node));
}

Expression Expression::binary(Op op, Expression lhs, Expression rhs) {
  auto node = std::make_shared<ExprNode>();
  node->op = op;
  node->a = std::move(lhs);
  node->b = std::move(rhs);
  return Expression(std::move(node));
}

Op Expression::op() const { return node_->op; }
double Expression::constant_value() const { return node_->value; }
Variable Expression::var() const { return node_->var; }
const Expression& Expression::lhs() const { return node_->a; }
const Expression& Expression::rhs() const { return node_->b; }

bool Expression::is_constant(double value) const {
  return node_->op == Op::Const && node_->value == value;
}

bool Expression::references(VarKind kind) const {
  switch (node_->op) {
    case Op::Const: return false;
    case Op::Var: return node_->var.kind == kind;
    case Op::Neg: return node_->a.references(kind);
    default:
      if (is_unary_func(node_->op)) return node_->a.references(kind);
      return node_->a.references(kind) || node_->b.references(kind);
  }
}

std::size_t Expression::node_count() const {
  switch (node_->op) {
    case Op::Const:
    case Op::Var: return 1;
    case Op::Neg: return 1 + node_->a.node_count();
    default:
      if (is_unary_func(node_->op)) return 1 + node_->a.node_count();
      return 1 + node_->a.node_count() + node_->b.node_count();
  }
}

std::string Expression::to_string() const {
  const ExprNode& n = *node_;
  switch (n.op) {
    case Op::Const:
      return n.value < 0 ? "(" + format_number(n.value) + ")" : format_number(n.value);
    case Op::Var: return variable_name(n.var);
    case Op::Neg: return "(-" + n.a.to_string() + ")";
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Pow: return "(" + n.a.to_string() + binary_symbol(n.op) + n.b.to_string() + ")";
    default: return std::string(func_name(n.op)) + "(" + n.a.to_string() + ")";
  }
}

bool operator==(const Expression& x, const Expression& y) {
  if (x.node_ == y.node_) return true;
  const ExprNode& a = *x.node_;
  const ExprNode& b = *y.node_;
  if (a.op != b.op) return false;
  switch (a.op) {
    case Op::Const: return a.value == b.value;
    case Op::Var: return a.var == b.var;
    case Op::Neg: return a.a == b.a;
    default:
      if (is_unary_func(a.op)) return a.a == b.a;
      return a.a == b.a && a.b == b.b;
  }
}

// ---------------------------------------------------------------------------
// Folding constructors

Expression operator+(const Expression& a, const Expression& b) {
  if (a.op() == Op::Const && b.op() == Op::Const)
    return Expression::constant(a.constant_value() + b.constant_value());
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  return Expression::binary(Op::Add, a, b);
}

Expression operator-(const Expression& a, const Expression& b) {
  if (a.op() == Op::Const && b.op() == Op::Const)
    return Expression::constant(a.constant_value() - b.constant_value());
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return -b;
  return Expression::binary(Op::Sub, a, b);
}

Expression operator*(const Expression& a, const Expression& b) {
  if (a.op() == Op::Const && b.op() == Op::Const)
    return Expression::constant(a.constant_value() * b.constant_value());
  if (a.is_constant(0.0) || b.is_constant(0.0)) return Expression::constant(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  if (a.is_constant(-1.0)) return -b;
  if (b.is_constant(-1.0)) return -a;
  return Expression::binary(Op::Mul, a, b);
}

Expression operator/(const Expression& a, const Expression& b) {
  if (b.is_constant(1.0)) return a;
  if (a.is_constant(0.0) && !b.is_constant(0.0)) return Expression::constant(0.0);
  if (a.op() == Op::Const && b.op() == Op::Const && b.constant_value() != 0.0)
    return Expression::constant(a.constant_value() / b.constant_value());
  return Expression::binary(Op::Div, a, b);
}

Expression operator-(const Expression& a) {
  if (a.op() == Op::Const) return Expression::constant(-a.constant_value());
  if (a.op() == Op::Neg) return a.lhs();
  return Expression::unary(Op::Neg, a);
}

Expression pow(const Expression& base, const Expression& exponent) {
  if (exponent.is_constant(1.0)) return base;
  if (exponent.is_constant(0.0)) return Expression::constant(1.0);
  return Expression::binary(Op::Pow, base, exponent);
}

Expression apply(Op func, const Expression& arg) {
  if (func == Op::Sgn && arg.op() == Op::Const)
    return Expression::constant(arg.constant_value() >= 0.0 ? 1.0 : -1.0);
  return Expression::unary(func, arg);
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  Parser(std::string_view text, const Dimensions& dims) : text_(text), dims_(dims) {}

  Expression parse() {
    skip_ws();
    if (at_end()) fail("empty expression");
    Expression e = parse_sum();
    skip_ws();
    if (!at_end()) fail(std::string("unexpected '") + text_[pos_] + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& message) const { fail_at(message, pos_); }
  [[noreturn]] void fail_at(const std::string& message, std::size_t at) const {
    throw ParseError(ParseError::Kind::Syntax, message, at);
  }

  bool at_end() const { return pos_ >= text_.size(); }
  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip_ws();
    if (!at_end() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expression parse_sum() {
    Expression lhs = parse_product();
    for (;;) {
      if (accept('+')) {
        lhs = Expression::binary(Op::Add, lhs, parse_product());
      } else if (accept('-')) {
        lhs = Expression::binary(Op::Sub, lhs, parse_product());
      } else {
        return lhs;
      }
    }
  }

  Expression parse_product() {
    Expression lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = Expression::binary(Op::Mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = Expression::binary(Op::Div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  Expression parse_unary() {
    if (accept('-')) {
      Expression operand = parse_unary();
      if (operand.op() == Op::Const) return Expression::constant(-operand.constant_value());
      return Expression::unary(Op::Neg, operand);
    }
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  Expression parse_power() {
    Expression base = parse_primary();
    if (accept('^')) return Expression::binary(Op::Pow, base, parse_unary());
    return base;
  }

  Expression parse_primary() {
    skip_ws();
    if (at_end()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    if (c == '(') {
      ++pos_;
      Expression inner = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    fail(std::string("unexpected '") + c + "'");
  }

  Expression parse_number() {
    const std::size_t start = pos_;
    while (!at_end() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
      ++pos_;
    if (!at_end() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
      if (look < text_.size() && std::isdigit(static_cast<unsigned char>(text_[look]))) {
        pos_ = look;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    double value = 0.0;
    const char* first = text_.data() + start;
    const char* last = text_.data() + pos_;
    auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc() || res.ptr != last) fail_at("malformed number", start);
    return Expression::constant(value);
  }

  Expression parse_identifier() {
    const std::size_t start = pos_;
    while (!at_end() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);

    if (auto func = func_from_name(name)) {
      if (!accept('(')) fail("expected '(' after function name");
      Expression arg = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return Expression::unary(*func, arg);
    }
    if (name == "pi") return Expression::constant(std::numbers::pi);
    if (name == "t") {
      if (!dims_.allow_time)
        throw ParseError(ParseError::Kind::UndeclaredVariable, "time variable 't' not allowed here", start);
      return Expression::variable({VarKind::Time, 0});
    }

    auto indexed = [&](std::string_view prefix, VarKind kind, int limit,
                       bool allowed) -> std::optional<Expression> {
      if (name.size() <= prefix.size() || name.substr(0, prefix.size()) != prefix) return std::nullopt;
      const std::string_view digits = name.substr(prefix.size());
      int index = 0;
      auto res = std::from_chars(digits.data(), digits.data() + digits.size(), index);
      if (res.ec != std::errc() || res.ptr != digits.data() + digits.size()) return std::nullopt;
      if (!allowed || index < 1 || index > limit)
        throw ParseError(ParseError::Kind::UndeclaredVariable,
                         "undeclared variable '" + std::string(name) + "'", start);
      return Expression::variable({kind, index - 1});
    };
    if (auto v = indexed("psi", VarKind::Psi, dims_.n, dims_.allow_psi)) return *v;
    if (auto v = indexed("x", VarKind::X, dims_.n, true)) return *v;
    if (auto v = indexed("u", VarKind::U, dims_.nu, true)) return *v;

    throw ParseError(ParseError::Kind::UndeclaredVariable,
                     "unknown identifier '" + std::string(name) + "'", start);
  }

  std::string_view text_;
  const Dimensions& dims_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression parse_expression(std::string_view text, const Dimensions& dims) {
  return Parser(text, dims).parse();
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

double lookup(const Variable& v, const Point& p, const Expression& e) {
  std::span<const double> values;
  switch (v.kind) {
    case VarKind::X: values = p.x; break;
    case VarKind::Psi: values = p.psi; break;
    case VarKind::U: values = p.u; break;
    case VarKind::Time: return p.t;
  }
  if (v.index < 0 || static_cast<std::size_t>(v.index) >= values.size())
    throw DomainError("unassigned variable", e.to_string());
  return values[static_cast<std::size_t>(v.index)];
}

}  // namespace

double eval(const Expression& e, const Point& p) {
  switch (e.op()) {
    case Op::Const: return e.constant_value();
    case Op::Var: return lookup(e.var(), p, e);
    case Op::Neg: return -eval(e.lhs(), p);
    case Op::Add: return eval(e.lhs(), p) + eval(e.rhs(), p);
    case Op::Sub: return eval(e.lhs(), p) - eval(e.rhs(), p);
    case Op::Mul: return eval(e.lhs(), p) * eval(e.rhs(), p);
    case Op::Div: {
      const double num = eval(e.lhs(), p);
      const double den = eval(e.rhs(), p);
      if (den == 0.0) throw DomainError("division by zero", e.to_string());
      return num / den;
    }
    case Op::Pow: {
      const double base = eval(e.lhs(), p);
      const double expo = eval(e.rhs(), p);
      if (is_integer(expo)) {
        if (base == 0.0 && expo < 0.0) throw DomainError("division by zero", e.to_string());
        return std::pow(base, expo);
      }
      if (!(base > 0.0)) throw DomainError("non-integer power of non-positive base", e.to_string());
      return std::pow(base, expo);
    }
    case Op::Sin: return std::sin(eval(e.lhs(), p));
    case Op::Cos: return std::cos(eval(e.lhs(), p));
    case Op::Exp: return std::exp(eval(e.lhs(), p));
    case Op::Log: {
      const double a = eval(e.lhs(), p);
      if (!(a > 0.0)) throw DomainError("log of non-positive value", e.to_string());
      return std::log(a);
    }
    case Op::Sqrt: {
      const double a = eval(e.lhs(), p);
      if (a < 0.0) throw DomainError("sqrt of negative value", e.to_string());
      return std::sqrt(a);
    }
    case Op::Abs: return std::abs(eval(e.lhs(), p));
    case Op::Sgn: return eval(e.lhs(), p) >= 0.0 ? 1.0 : -1.0;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Differentiation

Expression differentiate(const Expression& e, const Variable& var) {
  using C = Expression;
  switch (e.op()) {
    case Op::Const: return C::constant(0.0);
    case Op::Var: return C::constant(e.var() == var ? 1.0 : 0.0);
    case Op::Neg: return -differentiate(e.lhs(), var);
    case Op::Add: return differentiate(e.lhs(), var) + differentiate(e.rhs(), var);
    case Op::Sub: return differentiate(e.lhs(), var) - differentiate(e.rhs(), var);
    case Op::Mul: {
      const Expression& a = e.lhs();
      const Expression& b = e.rhs();
      return differentiate(a, var) * b + a * differentiate(b, var);
    }
    case Op::Div: {
      const Expression& a = e.lhs();
      const Expression& b = e.rhs();
      const Expression da = differentiate(a, var);
      const Expression db = differentiate(b, var);
      if (db.is_constant(0.0)) return da / b;
      return (da * b - a * db) / pow(b, C::constant(2.0));
    }
    case Op::Pow: {
      const Expression& base = e.lhs();
      const Expression& expo = e.rhs();
      const Expression dbase = differentiate(base, var);
      if (expo.op() == Op::Const) {
        const double c = expo.constant_value();
        return C::constant(c) * pow(base, C::constant(c - 1.0)) * dbase;
      }
      const Expression dexpo = differentiate(expo, var);
      return e * (dexpo * apply(Op::Log, base) + expo * dbase / base);
    }
    case Op::Sin: return apply(Op::Cos, e.lhs()) * differentiate(e.lhs(), var);
    case Op::Cos: return -apply(Op::Sin, e.lhs()) * differentiate(e.lhs(), var);
    case Op::Exp: return e * differentiate(e.lhs(), var);
    case Op::Log: return differentiate(e.lhs(), var) / e.lhs();
    case Op::Sqrt: return differentiate(e.lhs(), var) / (C::constant(2.0) * e);
    case Op::Abs: return apply(Op::Sgn, e.lhs()) * differentiate(e.lhs(), var);
    case Op::Sgn: return C::constant(0.0);
  }
  return C::constant(0.0);
}

}  // namespace qdi
