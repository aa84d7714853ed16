#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "faec/channel/channel.hpp"
#include "faec/numerics/adam.hpp"
#include "faec/numerics/rng.hpp"
#include "faec/transceiver/transceiver.hpp"

namespace faec {

struct TrainConfig {
  std::uint64_t seed = 1;
  std::size_t batch_size = 64;      // sequences per step
  std::size_t seq_len = 10;         // T, blocks per sequence
  std::size_t edge_exclusion = 2;   // E, blocks per side without loss
  std::size_t guard_blocks = 4;     // G, zero blocks padded per side
  // BRNN receiver window during training; 0 decodes each whole sequence.
  std::size_t train_window = 0;
  std::uint64_t iterations = 5000;
  std::uint64_t eval_interval = 100;
  std::size_t heldout_sequences = 64;
  AdamConfig adam;
  ChannelConfig channel;

  void validate() const;
};

struct TrainRecord {
  std::uint64_t iteration = 0;
  double loss = 0.0;               // mean training loss since the previous record
  double block_error_rate = 0.0;   // on the fixed held-out batch
};

struct TrainReport {
  std::vector<TrainRecord> records;
  double initial_loss = 0.0;  // loss of the very first step
  double final_loss = 0.0;    // loss of the last record
  double wall_seconds = 0.0;
  std::string checkpoint_path;
};

// batch_size sequences of T i.i.d. uniform messages in [0, M). M = 1 gives zeros.
MessageBatch sample_batch(RngStream& rng, std::size_t batch_size, std::size_t seq_len,
                          std::size_t messages);

struct LossResult {
  double loss = 0.0;           // mean CE over counted blocks
  std::size_t block_errors = 0;
  std::size_t blocks = 0;      // counted (non-edge) blocks
};

// Differentiable end-to-end objective. Per sequence:
//   encode -> pad G zero blocks per side -> channel -> strip guards -> decode
// then the mean cross-entropy over blocks E..T-E-1. FFNN models decode block
// by block. BRNN models decode the whole training sequence at once, or, with
// a nonzero window W < T, run the sliding-window estimator (stride 1) and
// take the cross-entropy of the window-averaged probabilities.
class EndToEndLoss {
 public:
  EndToEndLoss(const ChannelConfig& channel, std::size_t edge_exclusion, std::size_t guard_blocks,
               std::size_t window = 0);

  // Draws one noise realization per sequence from `noise_rng` (in sequence
  // order). With want_gradient, accumulates into every Parameter::grad.
  LossResult evaluate(Transceiver& model, const MessageBatch& batch, RngStream& noise_rng,
                      bool want_gradient);
  // Frozen noise: noise[b] covers the padded waveform of sequence b.
  LossResult evaluate_with_noise(Transceiver& model, const MessageBatch& batch,
                                 const std::vector<Waveform>& noise, bool want_gradient);

  std::size_t padded_samples(std::size_t blocks, std::size_t samples_per_block) const {
    return (blocks + 2 * guard_blocks_) * samples_per_block;
  }
  // Loss weight of block t in a T-block sequence of a B-sequence batch.
  double block_weight(std::size_t t, std::size_t blocks, std::size_t batch) const;

 private:
  double decode_loss(Transceiver& model, const MessageBatch& batch, const RealBuffer& rx,
                     bool want_gradient, RealBuffer* grad_rx, LossResult& result) const;
  double sliding_decode_loss(Transceiver& model, const MessageBatch& batch, const RealBuffer& rx,
                             bool want_gradient, RealBuffer* grad_rx, LossResult& result) const;

  ChannelPass pass_;
  std::size_t edge_exclusion_;
  std::size_t guard_blocks_;
  std::size_t window_;
};

using TrainProgress = std::function<void(const TrainRecord&)>;

// cfg.iterations steps of sample_batch -> loss/gradients -> Adam -> reset,
// fully determined by cfg.seed. Throws NumericError on a non-finite loss or
// when the loss stays above 10x its initial value for 100 consecutive records.
TrainReport train(Transceiver& model, const TrainConfig& cfg, const TrainProgress& progress = {});

}  // namespace faec
