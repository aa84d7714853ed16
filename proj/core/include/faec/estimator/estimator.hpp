#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "faec/channel/channel.hpp"
#include "faec/numerics/buffer.hpp"
#include "faec/transceiver/transceiver.hpp"

namespace faec {

struct WindowConfig {
  std::size_t window_size = 10;  // Wn, blocks
  std::size_t stride = 1;        // only 1 is supported

  void validate() const;
};

// Something that maps a window of received blocks to one probability vector
// per block.
class WindowDecoder {
 public:
  virtual ~WindowDecoder() = default;
  virtual std::size_t messages() const = 0;
  virtual std::size_t samples_per_block() const = 0;
  // Decodes the windows rx[s*n, (s+window_blocks)*n) for every s in `starts`.
  // Result is [starts.size()*window_blocks x M], window-major.
  virtual RealBuffer decode_windows(std::span<const double> rx, std::span<const std::size_t> starts,
                                    std::size_t window_blocks) const = 0;
};

class TransceiverDecoder final : public WindowDecoder {
 public:
  explicit TransceiverDecoder(const Transceiver& model) : model_(model) {}
  std::size_t messages() const override { return model_.messages(); }
  std::size_t samples_per_block() const override { return model_.samples_per_block(); }
  RealBuffer decode_windows(std::span<const double> rx, std::span<const std::size_t> starts,
                            std::size_t window_blocks) const override;

 private:
  const Transceiver& model_;
};

// Sliding-window estimation with stride 1: every window start s = 0..T-Wn is
// decoded, and block t gets the arithmetic mean of the probability vectors of
// all windows covering it (edge blocks have fewer contributors). Windows are
// accumulated in ascending start order. Result is [T x M].
RealBuffer sliding_estimate(std::span<const double> rx, const WindowDecoder& decoder,
                            std::size_t window_size);

// argmax, ties broken toward the lowest index.
std::size_t decide(std::span<const double> p);

// Natural binary label of a message, MSB first, log2(M) bits.
std::vector<std::uint8_t> bits_of(std::size_t message, std::size_t messages);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

// Wilson score interval at 95% confidence.
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials);

struct BerResult {
  std::uint64_t bit_errors = 0;
  std::uint64_t bits_total = 0;
  double ber = 0.0;
  std::uint64_t block_errors = 0;
  std::uint64_t blocks_total = 0;
  Interval ci95;
};

// Hamming distance / length between two bit streams.
BerResult ber(std::span<const std::uint8_t> sent, std::span<const std::uint8_t> received);

class BerCounter {
 public:
  explicit BerCounter(std::size_t messages);
  void add(std::size_t sent, std::size_t decided);
  BerResult result() const;
  std::uint64_t bit_errors() const { return bit_errors_; }
  std::uint64_t blocks() const { return blocks_; }

 private:
  std::size_t messages_;
  std::size_t bits_per_message_;
  std::uint64_t bit_errors_ = 0;
  std::uint64_t block_errors_ = 0;
  std::uint64_t blocks_ = 0;
};

inline constexpr double kHdFecThreshold = 4.5e-3;
inline constexpr const char* kHdFecLabel = "6.7% HD-FEC";

struct EvalConfig {
  std::size_t window_size = 10;
  std::size_t sequence_blocks = 100;  // blocks per independently transmitted sequence
  std::size_t edge_exclusion = 2;     // blocks per sequence end excluded from counting
  std::size_t guard_blocks = 4;
  std::uint64_t min_errors = 100;     // stop once this many bit errors (0 disables)
  std::uint64_t max_blocks = 1'000'000;
  std::uint64_t seed = 1;

  void validate() const;
};

// Monte-Carlo BER: transmit independent sequences through the channel, run
// sliding_estimate on each, decide, and count non-edge blocks until
// min_errors bit errors or exactly max_blocks counted blocks.
BerResult evaluate_ber(const Transceiver& model, const ChannelConfig& channel, const EvalConfig& cfg);

}  // namespace faec
