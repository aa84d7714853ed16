#include "faec/estimator/estimator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "faec/errors.hpp"
#include "faec/numerics/rng.hpp"
#include "faec/trainer/trainer.hpp"

namespace faec {

namespace {
constexpr std::size_t kWindowsPerCall = 256;
}

void WindowConfig::validate() const {
  if (window_size < 1) throw ConfigError("window.size must be >= 1");
  if (stride != 1) throw ConfigError("window.stride must be 1");
}

RealBuffer TransceiverDecoder::decode_windows(std::span<const double> rx,
                                              std::span<const std::size_t> starts,
                                              std::size_t window_blocks) const {
  const std::size_t n = model_.samples_per_block();
  const std::size_t width = window_blocks * n;
  RealBuffer windows = RealBuffer::matrix(starts.size(), width);
  for (std::size_t w = 0; w < starts.size(); ++w) {
    const std::size_t off = starts[w] * n;
    if (off + width > rx.size()) throw ConfigError("decode_windows: window past end of stream");
    std::copy(rx.begin() + static_cast<std::ptrdiff_t>(off),
              rx.begin() + static_cast<std::ptrdiff_t>(off + width), windows.data() + w * width);
  }
  return model_.decode(windows, window_blocks);
}

RealBuffer sliding_estimate(std::span<const double> rx, const WindowDecoder& decoder,
                            std::size_t window_size) {
  const std::size_t n = decoder.samples_per_block();
  const std::size_t m = decoder.messages();
  if (window_size < 1) throw ConfigError("sliding_estimate: window must be >= 1 block");
  if (rx.size() % n != 0) throw ConfigError("sliding_estimate: stream is not whole blocks");
  const std::size_t blocks = rx.size() / n;
  if (blocks < window_size) {
    throw ConfigError("sliding_estimate: " + std::to_string(blocks) + " blocks < window of " +
                      std::to_string(window_size));
  }
  const std::size_t windows = blocks - window_size + 1;
  RealBuffer sum = RealBuffer::matrix(blocks, m);
  std::vector<std::size_t> count(blocks, 0);
  std::vector<std::size_t> starts;
  for (std::size_t first = 0; first < windows; first += kWindowsPerCall) {
    const std::size_t last = std::min(windows, first + kWindowsPerCall);
    starts.clear();
    for (std::size_t s = first; s < last; ++s) starts.push_back(s);
    const RealBuffer p = decoder.decode_windows(rx, starts, window_size);
    for (std::size_t w = 0; w < starts.size(); ++w) {
      for (std::size_t k = 0; k < window_size; ++k) {
        const std::size_t t = starts[w] + k;
        auto src = p.row(w * window_size + k);
        auto dst = sum.row(t);
        for (std::size_t i = 0; i < m; ++i) dst[i] += src[i];
        ++count[t];
      }
    }
  }
  for (std::size_t t = 0; t < blocks; ++t) {
    auto row = sum.row(t);
    for (auto& v : row) v /= static_cast<double>(count[t]);
    double total = 0.0;
    for (double v : row) total += v;
    for (auto& v : row) v /= total;
  }
  return sum;
}

std::size_t decide(std::span<const double> p) {
  if (p.empty()) throw ConfigError("decide: empty probability vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return best;
}

std::vector<std::uint8_t> bits_of(std::size_t message, std::size_t messages) {
  if (messages < 1 || !std::has_single_bit(messages)) {
    throw ConfigError("bits_of: M must be a power of two");
  }
  if (message >= messages) throw ContractError("bits_of: message out of range");
  const auto width = static_cast<std::size_t>(std::countr_zero(messages));
  std::vector<std::uint8_t> bits(width);
  for (std::size_t i = 0; i < width; ++i) bits[i] = (message >> (width - 1 - i)) & 1U;
  return bits;
}

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials) {
  if (trials == 0) return {0.0, 1.0};
  constexpr double z = 1.959963984540054;
  const double nt = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / nt;
  const double denom = 1.0 + z * z / nt;
  const double center = (p + z * z / (2.0 * nt)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nt + z * z / (4.0 * nt * nt)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

BerResult ber(std::span<const std::uint8_t> sent, std::span<const std::uint8_t> received) {
  if (sent.size() != received.size()) {
    throw ContractError("ber: streams differ in length (" + std::to_string(sent.size()) + " vs " +
                      std::to_string(received.size()) + ")");
  }
  BerResult r;
  r.bits_total = sent.size();
  for (std::size_t i = 0; i < sent.size(); ++i) r.bit_errors += (sent[i] != received[i]) ? 1 : 0;
  r.ber = r.bits_total ? static_cast<double>(r.bit_errors) / static_cast<double>(r.bits_total) : 0.0;
  r.ci95 = wilson_interval(r.bit_errors, r.bits_total);
  return r;
}

BerCounter::BerCounter(std::size_t messages)
    : messages_(messages), bits_per_message_(bits_of(0, messages).size()) {}

void BerCounter::add(std::size_t sent, std::size_t decided) {
  if (sent >= messages_ || decided >= messages_) throw ContractError("BerCounter: message out of range");
  bit_errors_ += static_cast<std::uint64_t>(std::popcount(sent ^ decided));
  block_errors_ += sent != decided ? 1 : 0;
  ++blocks_;
}

BerResult BerCounter::result() const {
  BerResult r;
  r.bit_errors = bit_errors_;
  r.bits_total = blocks_ * bits_per_message_;
  r.ber = r.bits_total ? static_cast<double>(r.bit_errors) / static_cast<double>(r.bits_total) : 0.0;
  r.block_errors = block_errors_;
  r.blocks_total = blocks_;
  r.ci95 = wilson_interval(r.bit_errors, r.bits_total);
  return r;
}

void EvalConfig::validate() const {
  WindowConfig{window_size, 1}.validate();
  if (sequence_blocks <= 2 * edge_exclusion) {
    throw ConfigError("eval.sequence_blocks must exceed 2 * edge_exclusion");
  }
  if (sequence_blocks < window_size) throw ConfigError("eval.sequence_blocks must be >= window size");
  if (max_blocks < 1) throw ConfigError("eval.max_blocks must be >= 1");
}

BerResult evaluate_ber(const Transceiver& model, const ChannelConfig& channel, const EvalConfig& cfg) {
  cfg.validate();
  ChannelPass pass(channel);
  TransceiverDecoder decoder(model);
  const std::size_t m = model.messages();
  const std::size_t n = model.samples_per_block();
  const std::size_t body = cfg.sequence_blocks * n;
  const std::size_t guard = cfg.guard_blocks * n;
  BerCounter counter(m);
  Waveform padded(body + 2 * guard);

  for (std::uint64_t seq = 0;; ++seq) {
    RngStream msg_rng = RngStream::derive(cfg.seed, StreamPurpose::eval_messages, {seq});
    RngStream noise_rng = RngStream::derive(cfg.seed, StreamPurpose::eval_noise, {seq});
    const MessageSequence sent = sample_batch(msg_rng, 1, cfg.sequence_blocks, m).front();
    const auto tx = model.encode_sequence(sent);
    std::fill(padded.begin(), padded.end(), 0.0);
    std::copy(tx.begin(), tx.end(), padded.begin() + static_cast<std::ptrdiff_t>(guard));
    const Waveform rx = pass.forward(padded, noise_rng);
    const RealBuffer p = sliding_estimate(
        std::span<const double>(rx).subspan(guard, body), decoder, cfg.window_size);
    for (std::size_t t = cfg.edge_exclusion; t + cfg.edge_exclusion < cfg.sequence_blocks; ++t) {
      counter.add(sent[t], decide(p.row(t)));
      if (counter.blocks() >= cfg.max_blocks) return counter.result();
    }
    if (cfg.min_errors > 0 && counter.bit_errors() >= cfg.min_errors) return counter.result();
  }
}

}  // namespace faec
