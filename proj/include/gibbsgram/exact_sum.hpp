#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

namespace gibbs {

/// Exact accumulator for sums of doubles.
///
/// The running sum is held as a fixed-point integer in units of 2^-1074 (the
/// smallest subnormal), split into signed 32-bit digits stored in int64
/// slots, so every addition is exact and the result does not depend on the
/// order of additions or on how partial sums are merged. value() rounds the
/// exact sum once. Non-finite inputs poison the sum to NaN.
class ExactSum {
 public:
  void add(double x) {
    const auto bits = std::bit_cast<std::uint64_t>(x);
    const auto biased = static_cast<int>((bits >> 52) & 0x7ff);
    if (biased == 0x7ff) {
      poisoned_ = true;
      return;
    }
    std::uint64_t mantissa = bits & ((std::uint64_t{1} << 52) - 1);
    if (mantissa == 0 && biased == 0) return;
    int shift = biased - 1;  // value = mantissa * 2^(shift - 1074)
    if (biased != 0) {
      mantissa |= std::uint64_t{1} << 52;
    } else {
      shift = 0;
    }
    const int digit = shift >> 5;
    const unsigned __int128 wide = static_cast<unsigned __int128>(mantissa) << (shift & 31);
    const auto d0 = static_cast<std::int64_t>(static_cast<std::uint64_t>(wide) & 0xffffffffu);
    const auto d1 = static_cast<std::int64_t>(static_cast<std::uint64_t>(wide >> 32) & 0xffffffffu);
    const auto d2 = static_cast<std::int64_t>(static_cast<std::uint64_t>(wide >> 64));
    if (bits >> 63) {
      digits_[digit] -= d0;
      digits_[digit + 1] -= d1;
      digits_[digit + 2] -= d2;
    } else {
      digits_[digit] += d0;
      digits_[digit + 1] += d1;
      digits_[digit + 2] += d2;
    }
    if (++pending_ == kCarryInterval) normalize();
  }

  void merge(const ExactSum& other) {
    ExactSum rhs = other;
    rhs.normalize();
    normalize();
    for (int i = 0; i < kDigits; ++i) digits_[i] += rhs.digits_[i];
    poisoned_ = poisoned_ || rhs.poisoned_;
    normalize();
  }

  double value() const {
    if (poisoned_) return std::numeric_limits<double>::quiet_NaN();
    ExactSum s = *this;
    s.normalize();
    bool negative = s.digits_[kDigits - 1] < 0;
    if (negative) {
      for (auto& d : s.digits_) d = -d;
      s.normalize();
    }
    int top = kDigits - 1;
    while (top >= 0 && s.digits_[top] == 0) --top;
    if (top < 0) return 0.0;
    // Three leading digits carry 65+ significant bits; a sticky bit stands in
    // for everything below so the conversion rounds correctly.
    unsigned __int128 head = 0;
    int low = top - 2;
    for (int i = top; i >= std::max(low, 0); --i)
      head = (head << 32) | static_cast<std::uint64_t>(s.digits_[i]);
    if (low < 0) {
      head <<= 32 * (-low);
    } else {
      for (int i = 0; i < low; ++i)
        if (s.digits_[i] != 0) {
          head |= 1;
          break;
        }
    }
    const double r = std::ldexp(static_cast<double>(head), 32 * low - 1074);
    return negative ? -r : r;
  }

  void reset() { *this = ExactSum(); }

  bool operator==(const ExactSum& other) const {
    ExactSum a = *this, b = other;
    a.normalize();
    b.normalize();
    return a.digits_ == b.digits_ && a.poisoned_ == b.poisoned_;
  }

 private:
  // 2046 + 85 bits of position plus carry headroom, in 32-bit digits.
  static constexpr int kDigits = 70;
  static constexpr std::uint32_t kCarryInterval = 1u << 30;

  void normalize() {
    std::int64_t carry = 0;
    for (int i = 0; i < kDigits - 1; ++i) {
      const std::int64_t d = digits_[i] + carry;
      carry = d >> 32;  // arithmetic shift: floor division
      digits_[i] = d - (carry << 32);
    }
    digits_[kDigits - 1] += carry;
    pending_ = 0;
  }

  std::array<std::int64_t, kDigits> digits_{};
  std::uint32_t pending_ = 0;
  bool poisoned_ = false;
};

}  // namespace gibbs
