#pragma once

// Smooth scalar expressions over state (x), support-direction (psi), control (u)
// and time (t) variables, with exact symbolic differentiation.
//
// Grammar (whitespace insignificant):
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?          right associative
//   primary := number | variable | 'pi' | func '(' expr ')' | '(' expr ')'
//   variable:= 'x'<i> | 'psi'<i> | 'u'<i> | 't'       1-based indices
//   func    := sin | cos | exp | log | sqrt | abs | sgn
//
// Conventions: sgn(0) = +1, so abs'(0) = +1 as well. A non-integer exponent
// needs a positive base; integer exponents accept any base.

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "qdi/errors.hpp"

namespace qdi {

enum class VarKind { X, Psi, U, Time };

struct Variable {
  VarKind kind = VarKind::X;
  int index = 0;  // 0-based; ignored for Time

  friend bool operator==(const Variable&, const Variable&) = default;
};

std::string variable_name(const Variable& v);

/// Variables an expression may reference.
struct Dimensions {
  int n = 0;
  int nu = 0;
  bool allow_psi = true;
  bool allow_time = false;
};

enum class Op { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Log, Sqrt, Abs, Sgn };

struct ExprNode;

/// Immutable expression tree with value semantics (shared structure).
class Expression {
 public:
  Expression();  // the constant 0

  static Expression constant(double value);
  static Expression variable(Variable v);
  static Expression unary(Op op, Expression arg);
  static Expression binary(Op op, Expression lhs, Expression rhs);

  Op op() const;
  double constant_value() const;  // Op::Const only
  Variable var() const;           // Op::Var only
  const Expression& lhs() const;  // first (or only) argument
  const Expression& rhs() const;

  bool is_constant(double value) const;
  bool references(VarKind kind) const;
  std::size_t node_count() const;

  /// Fully parenthesized text; parse(to_string()) is structurally equal to *this.
  std::string to_string() const;

  friend bool operator==(const Expression& a, const Expression& b);

 private:
  friend struct ExprNode;
  explicit Expression(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const ExprNode> node_;
};

// Folding constructors: trivial identities (0 + a, 1 * a, constant arithmetic) are reduced.
Expression operator+(const Expression& a, const Expression& b);
Expression operator-(const Expression& a, const Expression& b);
Expression operator*(const Expression& a, const Expression& b);
Expression operator/(const Expression& a, const Expression& b);
Expression operator-(const Expression& a);
Expression pow(const Expression& base, const Expression& exponent);
Expression apply(Op func, const Expression& arg);

Expression parse_expression(std::string_view text, const Dimensions& dims);

/// Values for every variable kind. Spans may be shorter than the declared
/// dimensions only if the expression does not reference the missing entries.
struct Point {
  std::span<const double> x;
  std::span<const double> psi;
  std::span<const double> u;
  double t = 0.0;
};

double eval(const Expression& e, const Point& point);

Expression differentiate(const Expression& e, const Variable& var);

}  // namespace qdi
