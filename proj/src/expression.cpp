#include "gibbsgram/expression.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>

#include "gibbsgram/errors.hpp"

namespace gibbs {

class ExpressionParser {
 public:
  ExpressionParser(std::string_view src, Index dimension) : src_(src), dimension_(dimension) {}

  std::vector<Expression::Instruction> run() {
    parse_sum();
    skip_space();
    if (pos_ != src_.size()) fail("unexpected character");
    return std::move(program_);
  }

 private:
  using Op = Expression::OpCode;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("expression '" + std::string(src_) + "': " + what + " at column " +
                      std::to_string(pos_ + 1));
  }

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

  void emit(Op op, int symbol = 0, double value = 0.0) {
    program_.push_back({op, symbol, value});
    if (op == Op::push_constant || op == Op::push_symbol) {
      if (++depth_ > Expression::kMaxStack) fail("expression nests too deeply");
    } else if (op != Op::neg) {
      --depth_;
    }
  }

  void parse_sum() {
    parse_product();
    for (;;) {
      if (accept('+')) {
        parse_product();
        emit(Op::add);
      } else if (accept('-')) {
        parse_product();
        emit(Op::sub);
      } else {
        return;
      }
    }
  }

  void parse_product() {
    parse_unary();
    for (;;) {
      if (accept('*')) {
        parse_unary();
        emit(Op::mul);
      } else if (accept('/')) {
        parse_unary();
        emit(Op::div);
      } else {
        return;
      }
    }
  }

  void parse_unary() {
    if (accept('-')) {
      parse_unary();
      emit(Op::neg);
    } else if (accept('+')) {
      parse_unary();
    } else {
      parse_power();
    }
  }

  void parse_power() {
    parse_primary();
    if (accept('^')) {
      parse_unary();
      emit(Op::pow);
    }
  }

  void parse_primary() {
    skip_space();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      parse_sum();
      if (!accept(')')) fail("expected ')'");
      return;
    }
    if (c == 'x') {
      ++pos_;
      const std::size_t start = pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      if (start == pos_) fail("expected state index after 'x'");
      int index = 0;
      std::from_chars(src_.data() + start, src_.data() + pos_, index);
      if (index < 1 || index > dimension_) {
        pos_ = start - 1;
        fail("state symbol x" + std::to_string(index) + " outside x1..x" +
             std::to_string(dimension_));
      }
      emit(Op::push_symbol, index - 1);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double value = 0.0;
      const auto [end, ec] = std::from_chars(src_.data() + pos_, src_.data() + src_.size(), value);
      if (ec != std::errc()) fail("malformed number");
      pos_ = static_cast<std::size_t>(end - src_.data());
      emit(Op::push_constant, 0, value);
      return;
    }
    fail(std::string("unexpected '") + c + "'");
  }

  std::string_view src_;
  Index dimension_;
  std::size_t pos_ = 0;
  int depth_ = 0;
  std::vector<Expression::Instruction> program_;
};

Expression Expression::parse(std::string_view source, Index dimension) {
  Expression e;
  e.source_ = std::string(source);
  e.program_ = ExpressionParser(source, dimension).run();
  return e;
}

double Expression::evaluate(const Eigen::Ref<const Vector>& x) const {
  std::array<double, kMaxStack> stack;
  int top = -1;
  for (const Instruction& ins : program_) {
    switch (ins.op) {
      case OpCode::push_constant: stack[++top] = ins.value; break;
      case OpCode::push_symbol: stack[++top] = x[ins.symbol]; break;
      case OpCode::neg: stack[top] = -stack[top]; break;
      case OpCode::add: --top; stack[top] += stack[top + 1]; break;
      case OpCode::sub: --top; stack[top] -= stack[top + 1]; break;
      case OpCode::mul: --top; stack[top] *= stack[top + 1]; break;
      case OpCode::div: --top; stack[top] /= stack[top + 1]; break;
      case OpCode::pow: {
        --top;
        const double e = stack[top + 1];
        // integer powers stay exact for negative bases
        if (e == std::round(e) && std::abs(e) <= 64) {
          double base = stack[top], r = 1.0;
          for (int k = 0; k < static_cast<int>(std::abs(e)); ++k) r *= base;
          stack[top] = e < 0 ? 1.0 / r : r;
        } else {
          stack[top] = std::pow(stack[top], e);
        }
        break;
      }
    }
  }
  return stack[0];
}

}  // namespace gibbs
