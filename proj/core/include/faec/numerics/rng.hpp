#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>

#include "faec/numerics/buffer.hpp"

namespace faec {

// splitmix64; used to expand 64-bit seeds into xoshiro state.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();

 private:
  std::uint64_t state_;
};

// xoshiro256** 1.0 (Blackman & Vigna).
class Xoshiro256StarStar {
 public:
  explicit Xoshiro256StarStar(std::uint64_t seed);
  // Raw state; must not be all zero.
  explicit Xoshiro256StarStar(const std::array<std::uint64_t, 4>& state);
  std::uint64_t next();
  const std::array<std::uint64_t, 4>& state() const { return s_; }

 private:
  std::array<std::uint64_t, 4> s_{};
};

// Purpose tags for derived streams. Values are part of the reproducibility
// contract: changing them changes every seeded result.
enum class StreamPurpose : std::uint64_t {
  init = 1,
  messages = 2,
  noise = 3,
  heldout_messages = 4,
  heldout_noise = 5,
  eval_messages = 6,
  eval_noise = 7,
  test = 99,
};

// Seeded xoshiro256** stream with uniform, index and Box-Muller normal draws.
//
// Derived streams: starting from h = root, each index k is folded in as
//   h = splitmix64(h ^ (k * 0x9E3779B97F4A7C15)).next()
// and the resulting h seeds a fresh stream. Streams with different index
// paths are statistically independent for all practical purposes.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}

  static RngStream derive(std::uint64_t root, std::initializer_list<std::uint64_t> path);
  static RngStream derive(std::uint64_t root, StreamPurpose purpose,
                          std::initializer_list<std::uint64_t> path = {});

  std::uint64_t next_u64();
  // [0, 1), 53 random bits.
  double uniform();
  // Unbiased integer in [0, n) by rejection on the top bits; n >= 1.
  std::uint64_t uniform_index(std::uint64_t n);
  // Standard normal. Box-Muller: u1 in (0, 1], u2 in [0, 1),
  // r = sqrt(-2 ln u1), returns r*cos(2 pi u2) first, then r*sin(2 pi u2).
  double normal();

  std::uint64_t draws() const { return draws_; }

 private:
  Xoshiro256StarStar gen_;
  std::uint64_t draws_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// n i.i.d. N(0, sigma^2) samples. sigma == 0 yields exact zeros without
// consuming draws.
RealBuffer gaussian(RngStream& rng, std::size_t n, double sigma);
void fill_gaussian(RngStream& rng, std::span<double> out, double sigma);

}  // namespace faec
