#include "faec/numerics/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "faec/errors.hpp"

namespace faec {

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Xoshiro256StarStar::Xoshiro256StarStar(std::uint64_t seed) {
  SplitMix64 sm(seed);
  for (auto& word : s_) word = sm.next();
}

Xoshiro256StarStar::Xoshiro256StarStar(const std::array<std::uint64_t, 4>& state) : s_(state) {
  if (std::all_of(s_.begin(), s_.end(), [](std::uint64_t w) { return w == 0; })) {
    throw ConfigError("xoshiro256**: all-zero state");
  }
}

std::uint64_t Xoshiro256StarStar::next() {
  const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = std::rotl(s_[3], 45);
  return result;
}

RngStream RngStream::derive(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = root;
  for (auto k : path) h = SplitMix64(h ^ (k * 0x9E3779B97F4A7C15ULL)).next();
  return RngStream(h);
}

RngStream RngStream::derive(std::uint64_t root, StreamPurpose purpose,
                            std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = SplitMix64(root ^ (static_cast<std::uint64_t>(purpose) * 0x9E3779B97F4A7C15ULL)).next();
  for (auto k : path) h = SplitMix64(h ^ (k * 0x9E3779B97F4A7C15ULL)).next();
  return RngStream(h);
}

std::uint64_t RngStream::next_u64() {
  ++draws_;
  return gen_.next();
}

double RngStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
  if (n == 0) throw ConfigError("uniform_index: n must be >= 1");
  if (n == 1) return 0;
  // Smallest mask covering n-1, then reject values >= n.
  const int bits = 64 - std::countl_zero(n - 1);
  for (;;) {
    const std::uint64_t v = next_u64() >> (64 - bits);
    if (v < n) return v;
  }
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

void fill_gaussian(RngStream& rng, std::span<double> out, double sigma) {
  if (!(sigma >= 0.0)) throw ConfigError("gaussian: sigma must be >= 0");
  if (sigma == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  for (auto& v : out) v = sigma * rng.normal();
}

RealBuffer gaussian(RngStream& rng, std::size_t n, double sigma) {
  if (n == 0) return {};
  RealBuffer out({n});
  fill_gaussian(rng, out.span(), sigma);
  return out;
}

}  // namespace faec
