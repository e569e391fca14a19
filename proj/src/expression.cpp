#include "zeroflow/expression.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <numbers>

namespace zeroflow {

namespace {

constexpr std::size_t kMaxStack = 64;

std::string describe(const std::string& message, std::size_t offset) {
  return "syntax error at offset " + std::to_string(offset) + ": " + message;
}

}  // namespace

ExpressionError::ExpressionError(const std::string& message, std::size_t offset)
    : ConfigError(describe(message, offset)), offset_(offset) {}

namespace {

class Parser {
 public:
  using Op = Expression::Op;

  explicit Parser(std::string_view src) : src_(src) {}

  template <class Emit>
  void parse(Emit emit) {
    emit_ = [&emit](Op op, double value) { emit(op, value); };
    expr();
    skip_space();
    if (pos_ < src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;
  std::function<void(Op, double)> emit_;

  [[noreturn]] void fail(const std::string& message) const { throw ExpressionError(message, pos_); }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expr() {
    term();
    for (;;) {
      if (accept('+')) {
        term();
        emit_(Op::add, 0.0);
      } else if (accept('-')) {
        term();
        emit_(Op::sub, 0.0);
      } else {
        return;
      }
    }
  }

  void term() {
    unary();
    for (;;) {
      if (accept('*')) {
        unary();
        emit_(Op::mul, 0.0);
      } else if (accept('/')) {
        unary();
        emit_(Op::div, 0.0);
      } else {
        return;
      }
    }
  }

  void unary() {
    if (accept('-')) {
      unary();
      emit_(Op::neg, 0.0);
    } else if (accept('+')) {
      unary();
    } else {
      power();
    }
  }

  void power() {
    primary();
    if (accept('^')) {
      unary();
      emit_(Op::pow, 0.0);
    }
  }

  void primary() {
    skip_space();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      expr();
      if (!accept(')')) fail("expected ')'");
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      number();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      name();
      return;
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  void number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    };
    digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      digits();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
      if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
        pos_ = look;
        digits();
      }
    }
    double value = 0.0;
    const auto [end, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (ec != std::errc() || end != src_.data() + pos_) {
      pos_ = start;
      fail("malformed number");
    }
    emit_(Op::number, value);
  }

  void name() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
    const std::string_view id = src_.substr(start, pos_ - start);

    Op fn{};
    bool is_function = true;
    if (id == "sin") {
      fn = Op::sin;
    } else if (id == "cos") {
      fn = Op::cos;
    } else if (id == "exp") {
      fn = Op::exp;
    } else if (id == "tanh") {
      fn = Op::tanh;
    } else {
      is_function = false;
    }
    if (is_function) {
      if (!accept('(')) fail("expected '(' after " + std::string(id));
      expr();
      if (!accept(')')) fail("expected ')'");
      emit_(fn, 0.0);
      return;
    }

    if (id == "t") {
      emit_(Op::var_t, 0.0);
    } else if (id == "x") {
      emit_(Op::var_x, 0.0);
    } else if (id == "u") {
      emit_(Op::var_u, 0.0);
    } else if (id == "pi") {
      emit_(Op::number, std::numbers::pi);
    } else if (id == "e") {
      emit_(Op::number, std::numbers::e);
    } else {
      pos_ = start;
      fail("unknown identifier '" + std::string(id) + "'");
    }
  }
};

}  // namespace

Expression parse_expression(std::string_view src) {
  Expression e;
  e.source_ = std::string(src);
  std::size_t depth = 0;
  Parser(src).parse([&](Expression::Op op, double value) {
    using Op = Expression::Op;
    switch (op) {
      case Op::number:
      case Op::var_t:
      case Op::var_x:
      case Op::var_u:
        ++depth;
        break;
      case Op::add:
      case Op::sub:
      case Op::mul:
      case Op::div:
      case Op::pow:
        --depth;
        break;
      default:
        break;
    }
    e.max_depth_ = std::max(e.max_depth_, depth);
    e.code_.push_back({op, value});
  });
  if (e.max_depth_ > kMaxStack) throw ExpressionError("expression nests too deeply", 0);
  return e;
}

bool Expression::uses(char variable) const {
  if (variable != 't' && variable != 'x' && variable != 'u') return false;
  const Op wanted = variable == 't' ? Op::var_t : variable == 'x' ? Op::var_x : Op::var_u;
  for (const auto& in : code_) {
    if (in.op == wanted) return true;
  }
  return false;
}

double Expression::operator()(double t, double x, double u) const {
  std::array<double, kMaxStack> stack;
  std::size_t top = 0;
  for (const auto& in : code_) {
    switch (in.op) {
      case Op::number: stack[top++] = in.value; break;
      case Op::var_t: stack[top++] = t; break;
      case Op::var_x: stack[top++] = x; break;
      case Op::var_u: stack[top++] = u; break;
      case Op::add: --top; stack[top - 1] += stack[top]; break;
      case Op::sub: --top; stack[top - 1] -= stack[top]; break;
      case Op::mul: --top; stack[top - 1] *= stack[top]; break;
      case Op::div: --top; stack[top - 1] /= stack[top]; break;
      case Op::pow: --top; stack[top - 1] = std::pow(stack[top - 1], stack[top]); break;
      case Op::neg: stack[top - 1] = -stack[top - 1]; break;
      case Op::sin: stack[top - 1] = std::sin(stack[top - 1]); break;
      case Op::cos: stack[top - 1] = std::cos(stack[top - 1]); break;
      case Op::exp: stack[top - 1] = std::exp(stack[top - 1]); break;
      case Op::tanh: stack[top - 1] = std::tanh(stack[top - 1]); break;
    }
  }
  return top == 0 ? 0.0 : stack[0];
}

}  // namespace zeroflow
