#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "gibbsgram/types.hpp"

namespace gibbs {

/// A compiled arithmetic expression over the state symbols x1..xn.
///
/// Grammar: numbers, symbols `x<k>` (1-based), binary + - * / ^, unary
/// minus and parentheses. `^` binds tighter than unary minus and is right
/// associative, so -x1^2 == -(x1^2).
class Expression {
 public:
  /// Throws ConfigError with the column of the offending token.
  static Expression parse(std::string_view source, Index dimension);

  double evaluate(const Eigen::Ref<const Vector>& x) const;

  const std::string& source() const { return source_; }

 private:
  enum class OpCode : unsigned char { push_constant, push_symbol, add, sub, mul, div, pow, neg };
  struct Instruction {
    OpCode op;
    int symbol = 0;
    double value = 0.0;
  };
  static constexpr int kMaxStack = 64;

  std::string source_;
  std::vector<Instruction> program_;

  friend class ExpressionParser;
};

}  // namespace gibbs
