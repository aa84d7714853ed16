#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "faec/errors.hpp"
#include "faec/estimator/estimator.hpp"
#include "faec/numerics/rng.hpp"

namespace faec {
namespace {

// Deterministic pseudo-random decoder: the vector for block j of the window
// starting at s depends on (seed, s, j, Wn) and on the window's samples.
class ScriptedDecoder final : public WindowDecoder {
 public:
  ScriptedDecoder(std::uint64_t seed, std::size_t messages, std::size_t n)
      : seed_(seed), messages_(messages), n_(n) {}
  std::size_t messages() const override { return messages_; }
  std::size_t samples_per_block() const override { return n_; }

  std::vector<double> vector_for(std::span<const double> rx, std::size_t s, std::size_t j,
                                 std::size_t w) const {
    RngStream rng = RngStream::derive(seed_, StreamPurpose::test, {s, j, w});
    std::vector<double> p(messages_);
    double sum = 0.0;
    for (std::size_t m = 0; m < messages_; ++m) {
      p[m] = rng.uniform() + 0.01 * std::abs(rx[(s + j) * n_ + m % n_]);
      sum += p[m];
    }
    for (double& v : p) v /= sum;
    return p;
  }

  RealBuffer decode_windows(std::span<const double> rx, std::span<const std::size_t> starts,
                            std::size_t w) const override {
    RealBuffer out = RealBuffer::matrix(starts.size() * w, messages_);
    for (std::size_t k = 0; k < starts.size(); ++k) {
      seen_.insert(starts[k]);
      for (std::size_t j = 0; j < w; ++j) {
        const auto p = vector_for(rx, starts[k], j, w);
        std::copy(p.begin(), p.end(), out.row(k * w + j).begin());
      }
    }
    return out;
  }

  mutable std::set<std::size_t> seen_;

 private:
  std::uint64_t seed_;
  std::size_t messages_;
  std::size_t n_;
};

// Brute force: for each block, list the windows covering it and average.
std::vector<std::vector<double>> overlap_average(std::span<const double> rx, const ScriptedDecoder& d,
                                                 std::size_t T, std::size_t W) {
  std::vector<std::vector<double>> out(T, std::vector<double>(d.messages(), 0.0));
  for (std::size_t t = 0; t < T; ++t) {
    std::size_t count = 0;
    for (std::size_t s = 0; s + W <= T; ++s) {
      if (t < s || t >= s + W) continue;
      const auto p = d.vector_for(rx, s, t - s, W);
      for (std::size_t m = 0; m < p.size(); ++m) out[t][m] += p[m];
      ++count;
    }
    for (double& v : out[t]) v /= static_cast<double>(count);
  }
  return out;
}

TEST(SlidingEstimate, MatchesOverlapAverageOracle) {
  constexpr std::size_t kN = 3;
  for (std::size_t T = 1; T <= 8; ++T) {
    for (std::size_t W = 1; W <= T; ++W) {
      for (std::uint64_t seed : {1u, 2u, 3u}) {
        const std::size_t M = seed == 2 ? 2 : 8;
        ScriptedDecoder d(seed * 100 + T * 10 + W, M, kN);
        RngStream rng(seed + T);
        const RealBuffer rx = gaussian(rng, T * kN, 1.0);
        const RealBuffer est = sliding_estimate(rx.span(), d, W);
        const auto oracle = overlap_average(rx.span(), d, T, W);
        ASSERT_EQ(est.shape(), (Shape{T, M}));
        for (std::size_t t = 0; t < T; ++t) {
          for (std::size_t m = 0; m < M; ++m) {
            ASSERT_NEAR(est(t, m), oracle[t][m], 1e-12) << "T=" << T << " W=" << W << " t=" << t;
          }
        }
        EXPECT_EQ(d.seen_.size(), T - W + 1);
      }
    }
  }
}

TEST(SlidingEstimate, SingleBlockWindowIsPerBlockDecode) {
  ScriptedDecoder d(5, 4, 2);
  RngStream rng(6);
  const RealBuffer rx = gaussian(rng, 14, 1.0);
  const RealBuffer est = sliding_estimate(rx.span(), d, 1);
  for (std::size_t t = 0; t < 7; ++t) {
    const auto p = d.vector_for(rx.span(), t, 0, 1);
    for (std::size_t m = 0; m < 4; ++m) EXPECT_DOUBLE_EQ(est(t, m), p[m]);
  }
}

TEST(SlidingEstimate, FullWindowIsSingleDecode) {
  ScriptedDecoder d(7, 4, 2);
  RngStream rng(8);
  const RealBuffer rx = gaussian(rng, 12, 1.0);
  const RealBuffer est = sliding_estimate(rx.span(), d, 6);
  EXPECT_EQ(d.seen_, (std::set<std::size_t>{0}));
  for (std::size_t t = 0; t < 6; ++t) {
    const auto p = d.vector_for(rx.span(), 0, t, 6);
    for (std::size_t m = 0; m < 4; ++m) EXPECT_DOUBLE_EQ(est(t, m), p[m]);
  }
}

TEST(SlidingEstimate, RowsStayNormalized) {
  ScriptedDecoder d(9, 16, 4);
  RngStream rng(10);
  const RealBuffer rx = gaussian(rng, 4 * 20, 1.0);
  const RealBuffer est = sliding_estimate(rx.span(), d, 5);
  for (std::size_t t = 0; t < 20; ++t) {
    double s = 0.0;
    for (double v : est.row(t)) s += v;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(SlidingEstimate, ShortSequenceThrows) {
  ScriptedDecoder d(1, 4, 2);
  const std::vector<double> rx(6, 0.0);
  EXPECT_THROW(sliding_estimate(rx, d, 4), ConfigError);
  EXPECT_THROW(sliding_estimate(rx, d, 0), ConfigError);
  EXPECT_THROW(sliding_estimate(std::vector<double>(5, 0.0), d, 1), ConfigError);
}

TEST(SlidingEstimate, TransceiverDecoderMatchesDecodeWindow) {
  Architecture a;
  a.kind = ModelKind::brnn;
  a.messages = 4;
  a.samples_per_block = 3;
  a.brnn_hidden = 4;
  Transceiver model = Transceiver::create(a, 11, InitOptions{false});
  const TransceiverDecoder dec(model);
  RngStream rng(12);
  const RealBuffer rx = gaussian(rng, 18, 1.0);
  const std::vector<std::size_t> starts{0, 2, 3};
  const RealBuffer batched = dec.decode_windows(rx.span(), starts, 3);
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const RealBuffer one = model.decode_window(rx.span().subspan(starts[k] * 3, 9));
    for (std::size_t j = 0; j < 3; ++j) {
      for (std::size_t m = 0; m < 4; ++m) EXPECT_NEAR(batched(k * 3 + j, m), one(j, m), 1e-14);
    }
  }
}

// ---------------------------------------------------------------- decisions

TEST(Decide, Examples) {
  EXPECT_EQ(decide(std::vector<double>{0.1, 0.7, 0.2}), 1u);
  EXPECT_EQ(decide(std::vector<double>{0.4, 0.2, 0.4}), 0u);
  EXPECT_EQ(decide(std::vector<double>{0.25, 0.25, 0.25, 0.25}), 0u);
  EXPECT_EQ(decide(std::vector<double>{0.0, 0.0, 1.0}), 2u);
  EXPECT_EQ(decide(std::vector<double>{1.0, 7.0, 2.0}), 1u);  // scale does not matter
}

TEST(Bits, NaturalLabels) {
  EXPECT_EQ(bits_of(5, 16), (std::vector<std::uint8_t>{0, 1, 0, 1}));
  EXPECT_EQ(bits_of(0, 2), (std::vector<std::uint8_t>{0}));
  EXPECT_EQ(bits_of(63, 64), (std::vector<std::uint8_t>(6, 1)));
  EXPECT_EQ(bits_of(32, 64), (std::vector<std::uint8_t>{1, 0, 0, 0, 0, 0}));
  EXPECT_THROW(bits_of(16, 16), ContractError);
}

TEST(Ber, Examples) {
  std::vector<std::uint8_t> a(600, 0), b(600, 0);
  b[17] = 1;
  b[401] = 1;
  const BerResult r = ber(a, b);
  EXPECT_EQ(r.bit_errors, 2u);
  EXPECT_EQ(r.bits_total, 600u);
  EXPECT_DOUBLE_EQ(r.ber, 1.0 / 300.0);
  EXPECT_EQ(ber(b, a).ber, r.ber);
  EXPECT_EQ(ber(a, a).ber, 0.0);
  EXPECT_THROW(ber(a, std::vector<std::uint8_t>(599, 0)), ContractError);
}

TEST(BerCounter, CountsBitsAndBlocks) {
  BerCounter c(4);
  c.add(0, 3);  // 00 vs 11
  c.add(2, 2);
  c.add(1, 0);  // 01 vs 00
  const BerResult r = c.result();
  EXPECT_EQ(r.bit_errors, 3u);
  EXPECT_EQ(r.bits_total, 6u);
  EXPECT_EQ(r.block_errors, 2u);
  EXPECT_EQ(r.blocks_total, 3u);
  EXPECT_DOUBLE_EQ(r.ber, 0.5);
}

TEST(Wilson, ReferenceValues) {
  // Published 95% Wilson intervals.
  Interval i = wilson_interval(5, 10);
  EXPECT_NEAR(i.lo, 0.2366, 5e-5);
  EXPECT_NEAR(i.hi, 0.7634, 5e-5);
  i = wilson_interval(0, 10);
  EXPECT_EQ(i.lo, 0.0);
  EXPECT_NEAR(i.hi, 0.2775, 5e-5);
  i = wilson_interval(10, 10);
  EXPECT_NEAR(i.lo, 0.7225, 5e-5);
  EXPECT_NEAR(i.hi, 1.0, 1e-15);
  i = wilson_interval(81, 263);
  EXPECT_NEAR(i.lo, 0.2553, 5e-4);
  EXPECT_NEAR(i.hi, 0.3662, 5e-4);
  i = wilson_interval(0, 0);
  EXPECT_EQ(i.lo, 0.0);
  EXPECT_EQ(i.hi, 1.0);
}

TEST(Wilson, ContainsEstimateAndShrinks) {
  for (std::uint64_t n : {10u, 100u, 10000u}) {
    const Interval i = wilson_interval(n / 10, n);
    EXPECT_LT(i.lo, 0.1);
    EXPECT_GT(i.hi, 0.1);
  }
  EXPECT_LT(wilson_interval(1000, 10000).hi - wilson_interval(1000, 10000).lo,
            wilson_interval(10, 100).hi - wilson_interval(10, 100).lo);
}

// ---------------------------------------------------------------- Monte-Carlo

Transceiver small_model(ModelKind kind) {
  Architecture a;
  a.kind = kind;
  a.messages = 4;
  a.samples_per_block = 4;
  a.encoder_hidden = {8};
  a.decoder_hidden = {8};
  a.brnn_hidden = 4;
  return Transceiver::create(a, 13, InitOptions{false});
}

EvalConfig small_eval(std::size_t window) {
  EvalConfig cfg;
  cfg.window_size = window;
  cfg.sequence_blocks = 20;
  cfg.edge_exclusion = 2;
  cfg.guard_blocks = 2;
  cfg.min_errors = 0;
  cfg.max_blocks = 500;
  cfg.seed = 14;
  return cfg;
}

TEST(EvaluateBer, ExactBlockBudget) {
  for (ModelKind kind : {ModelKind::ffnn, ModelKind::brnn}) {
    const Transceiver model = small_model(kind);
    const BerResult r = evaluate_ber(model, ChannelConfig{}, small_eval(kind == ModelKind::ffnn ? 1 : 3));
    EXPECT_EQ(r.blocks_total, 500u);
    EXPECT_EQ(r.bits_total, 1000u);
    EXPECT_LE(r.ci95.lo, r.ber);
    EXPECT_GE(r.ci95.hi, r.ber);
  }
}

TEST(EvaluateBer, MinErrorsStopsEarly) {
  const Transceiver model = small_model(ModelKind::ffnn);
  EvalConfig cfg = small_eval(1);
  cfg.min_errors = 10;
  cfg.max_blocks = 100000;
  const BerResult r = evaluate_ber(model, ChannelConfig{}, cfg);
  EXPECT_GE(r.bit_errors, 10u);
  EXPECT_LT(r.blocks_total, 100u);
}

TEST(EvaluateBer, DeterministicAndSeedSensitive) {
  const Transceiver model = small_model(ModelKind::brnn);
  const EvalConfig cfg = small_eval(4);
  const BerResult a = evaluate_ber(model, ChannelConfig{}, cfg);
  const BerResult b = evaluate_ber(model, ChannelConfig{}, cfg);
  EXPECT_EQ(a.bit_errors, b.bit_errors);
  EvalConfig other = cfg;
  other.seed = 15;
  const BerResult c = evaluate_ber(model, ChannelConfig{}, other);
  // Independent runs of the same model agree within their intervals.
  EXPECT_TRUE(a.ci95.lo <= c.ci95.hi && c.ci95.lo <= a.ci95.hi);
}

TEST(EvaluateBer, InvalidConfig) {
  const Transceiver model = small_model(ModelKind::brnn);
  EvalConfig cfg = small_eval(30);
  EXPECT_THROW(evaluate_ber(model, ChannelConfig{}, cfg), ConfigError);
  cfg = small_eval(2);
  cfg.max_blocks = 0;
  EXPECT_THROW(evaluate_ber(model, ChannelConfig{}, cfg), ConfigError);
  cfg = small_eval(2);
  cfg.sequence_blocks = 4;  // nothing left after edge exclusion
  EXPECT_THROW(evaluate_ber(model, ChannelConfig{}, cfg), ConfigError);
}

}  // namespace
}  // namespace faec
