#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace gibbs {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Stateless:
/// the output is a pure function of (key, counter).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u, kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u, kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

/// Standard normal variates indexed by a 64-bit position within the stream of
/// one (seed, path) pair. Each Philox block yields two variates by Box-Muller;
/// the last block is cached so sequential reads cost one block per two draws.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t path)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        path_(path) {}

  double operator()(std::uint64_t index) {
    const std::uint64_t block = index >> 1;
    if (block != cached_block_) {
      fill(block);
      cached_block_ = block;
    }
    return cache_[index & 1];
  }

 private:
  static double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (std::uint64_t{hi} << 21) ^ (lo >> 11);
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  void fill(std::uint64_t block) {
    const auto r = philox4x32({static_cast<std::uint32_t>(block),
                               static_cast<std::uint32_t>(block >> 32),
                               static_cast<std::uint32_t>(path_),
                               static_cast<std::uint32_t>(path_ >> 32)},
                              key_);
    const double u1 = to_open_unit(r[0], r[1]);
    const double u2 = to_open_unit(r[2], r[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cache_[0] = radius * std::cos(angle);
    cache_[1] = radius * std::sin(angle);
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t path_;
  std::uint64_t cached_block_ = ~std::uint64_t{0};
  std::array<double, 2> cache_{};
};

/// SplitMix64 finalizer; derives replicate seeds from a base seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace gibbs
