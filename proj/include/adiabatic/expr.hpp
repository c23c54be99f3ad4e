#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "adiabatic/types.hpp"

namespace adiabatic {

/// Parse failure carrying the byte offset and the set of tokens that would
/// have been accepted there.
class ParseError : public ConfigError {
 public:
  ParseError(std::size_t offset, std::vector<std::string> expected, const std::string& detail);

  std::size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

/// Evaluation failure (non-finite result, sqrt of a negative, ...).
class DomainError : public RuntimeAbort {
 public:
  using RuntimeAbort::RuntimeAbort;
};

enum class Func { Sin, Cos, Tan, Tanh, Exp, Sqrt, Abs, Jb };

/// Real-valued expression in one variable x. Immutable; copies share nodes.
///
/// Grammar (unary minus binds tighter than '^', so "-x^2" is (-x)^2):
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := base ('^' factor)?
///   base   := number | 'x' | 'pi' | 'e' | func '(' expr ')' | '(' expr ')' | '-' base
///   func   := sin | cos | tan | tanh | exp | sqrt | abs | jb      (jb(x) = sqrt(1+x^2))
class Expr {
 public:
  enum class Kind { Number, Variable, Negate, Add, Sub, Mul, Div, Pow, Call };

  struct Node {
    Kind kind = Kind::Number;
    double value = 0.0;  // Number
    Func func = Func::Sin;  // Call
    std::shared_ptr<const Node> lhs;  // unary operand / left operand / call argument
    std::shared_ptr<const Node> rhs;
  };

  Expr();  // the constant 0
  explicit Expr(std::shared_ptr<const Node> root);

  static Expr number(double v);
  static Expr variable();

  double operator()(double x) const;
  /// Canonical fully parenthesized text; parse(to_string()) == *this.
  std::string to_string() const;
  /// Symbolic d/dx. Throws ConfigError for x-dependent exponents.
  Expr derivative() const;
  bool depends_on_x() const;

  const Node& root() const { return *root_; }
  bool operator==(const Expr& other) const;

 private:
  std::shared_ptr<const Node> root_;
};

Expr parse_expr(std::string_view text);

/// a + b with trivial zero folding.
Expr operator+(const Expr& a, const Expr& b);

}  // namespace adiabatic
