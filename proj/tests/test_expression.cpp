#include <doctest.h>

#include <cmath>

#include "gibbsgram/errors.hpp"
#include "gibbsgram/expression.hpp"

using namespace gibbs;

namespace {

double eval(const char* src, std::initializer_list<double> xs) {
  Vector x(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double v : xs) x[i++] = v;
  return Expression::parse(src, x.size()).evaluate(x);
}

}  // namespace

TEST_SUITE("expression") {
  TEST_CASE("arithmetic and precedence") {
    CHECK(eval("1 + 2 * 3", {}) == 7.0);
    CHECK(eval("(1 + 2) * 3", {}) == 9.0);
    CHECK(eval("2 ^ 3 ^ 2", {}) == 512.0);
    CHECK(eval("-x1^2", {3}) == -9.0);
    CHECK(eval("(-x1)^2", {3}) == 9.0);
    CHECK(eval("x1 - x2 - x3", {1, 2, 3}) == -4.0);
    CHECK(eval("x1 / x2 / 2", {8, 2}) == 2.0);
    CHECK(eval("--x1", {5}) == 5.0);
    CHECK(eval("1.5e-1 * x1", {2}) == doctest::Approx(0.3));
    CHECK(eval("x1^0.5", {4}) == 2.0);
    CHECK(eval("x1^-1", {4}) == 0.25);
  }

  TEST_CASE("integer powers keep the sign of negative bases") {
    CHECK(eval("x1^3", {-2}) == -8.0);
    CHECK(eval("x1 - x1^3/3 - x2", {-1, 0}) == doctest::Approx(-2.0 / 3.0).epsilon(1e-15));
  }

  TEST_CASE("parse errors carry a column") {
    auto message = [](const char* src, Index n) {
      try {
        Expression::parse(src, n);
      } catch (const ConfigError& e) {
        return std::string(e.what());
      }
      return std::string();
    };
    CHECK(message("x3", 2).find("column 1") != std::string::npos);
    CHECK(message("1 + ", 1).find("column") != std::string::npos);
    CHECK(message("(x1", 1).find("column") != std::string::npos);
    CHECK(message("x1 $ 2", 1).find("column 4") != std::string::npos);
    CHECK_FALSE(message("x0", 1).empty());
    CHECK_FALSE(message("", 1).empty());
    CHECK_FALSE(message("1 2", 1).empty());
  }

  TEST_CASE("division by zero yields a non-finite value, not an error") {
    CHECK(std::isinf(eval("1 / x1", {0})));
  }
}
