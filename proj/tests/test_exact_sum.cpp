#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "gibbsgram/exact_sum.hpp"

using namespace gibbs;

namespace {

// 2200 binary digits hold any finite sum of a few thousand doubles exactly.
using Wide = boost::multiprecision::number<
    boost::multiprecision::cpp_bin_float<2200, boost::multiprecision::digit_base_2>>;

double reference_sum(const std::vector<double>& xs) {
  Wide s = 0;
  for (double x : xs) s += Wide(x);
  return s.convert_to<double>();
}

double exact(const std::vector<double>& xs) {
  ExactSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

std::vector<double> nasty(std::mt19937_64& rng, int n) {
  std::uniform_int_distribution<int> expo(-1070, 1000);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::vector<double> xs;
  for (int i = 0; i < n; ++i) {
    const double x = std::ldexp(mant(rng), expo(rng));
    xs.push_back(x);
    if (i % 3 == 0) xs.push_back(-x);
  }
  return xs;
}

}  // namespace

TEST_SUITE("exact_sum") {
  TEST_CASE("cancellation") {
    CHECK(exact({1e100, 1.0, -1e100}) == 1.0);
    CHECK(exact({0.1, 0.2, -0.3}) == reference_sum({0.1, 0.2, -0.3}));
    CHECK(exact({}) == 0.0);
    const double tiny = std::numeric_limits<double>::denorm_min();
    CHECK(exact({tiny, tiny, -tiny}) == tiny);
    const double big = std::numeric_limits<double>::max();
    CHECK(exact({big, big, -big}) == big);
  }

  TEST_CASE("matches a wide-precision reference") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      const auto xs = nasty(rng, 200);
      CHECK(exact(xs) == reference_sum(xs));
    }
  }

  TEST_CASE("sums of ordinary magnitudes") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> n01;
    std::vector<double> xs;
    for (int i = 0; i < 100000; ++i) xs.push_back(n01(rng) * n01(rng));
    CHECK(exact(xs) == reference_sum(xs));
  }

  TEST_CASE("order and merge independence") {
    std::mt19937_64 rng(13);
    auto xs = nasty(rng, 500);
    const double v = exact(xs);
    for (int trial = 0; trial < 10; ++trial) {
      std::shuffle(xs.begin(), xs.end(), rng);
      CHECK(exact(xs) == v);
      const std::size_t cut = std::uniform_int_distribution<std::size_t>(0, xs.size())(rng);
      ExactSum a, b;
      for (std::size_t i = 0; i < cut; ++i) a.add(xs[i]);
      for (std::size_t i = cut; i < xs.size(); ++i) b.add(xs[i]);
      ExactSum ab = a, ba = b;
      ab.merge(b);
      ba.merge(a);
      CHECK(ab.value() == v);
      CHECK(ab == ba);
    }
  }

  TEST_CASE("long runs carry correctly") {
    ExactSum s;
    const long n = 3000000;
    for (long i = 0; i < n; ++i) s.add(0.75);
    CHECK(s.value() == 0.75 * static_cast<double>(n));
  }

  TEST_CASE("non-finite input poisons") {
    ExactSum s;
    s.add(1.0);
    s.add(std::numeric_limits<double>::infinity());
    CHECK(std::isnan(s.value()));
    s.reset();
    s.add(2.0);
    CHECK(s.value() == 2.0);
  }
}
