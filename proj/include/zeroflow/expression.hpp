#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "zeroflow/errors.hpp"

namespace zeroflow {

/// Raised for malformed expressions; offset() is the 0-based character
/// position where parsing stopped.
class ExpressionError : public ConfigError {
 public:
  ExpressionError(const std::string& message, std::size_t offset);
  [[nodiscard]] std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Compiled arithmetic expression in the variables t, x, u.
///
/// Grammar:
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := ('+' | '-') unary | power
///   power   := primary ('^' unary)?
///   primary := number | name | name '(' expr ')' | '(' expr ')'
///
/// Names are the variables t, x, u, the constants pi and e, and the
/// functions sin, cos, exp, tanh. '^' is right-associative and binds
/// tighter than unary minus, so -2^2 is -4.
class Expression {
 public:
  /// Postfix instruction set the parser compiles to.
  enum class Op : unsigned char { number, var_t, var_x, var_u, add, sub, mul, div, pow, neg, sin, cos, exp, tanh };

  Expression() = default;

  double operator()(double t, double x, double u) const;

  [[nodiscard]] bool uses(char variable) const;
  [[nodiscard]] const std::string& source() const { return source_; }
  [[nodiscard]] bool empty() const { return code_.empty(); }

 private:
  friend Expression parse_expression(std::string_view src);

  struct Instr {
    Op op;
    double value = 0.0;
  };

  std::string source_;
  std::vector<Instr> code_;
  std::size_t max_depth_ = 0;
};

/// Parses the whole string or throws ExpressionError; never returns a
/// partially parsed expression.
Expression parse_expression(std::string_view src);

}  // namespace zeroflow
