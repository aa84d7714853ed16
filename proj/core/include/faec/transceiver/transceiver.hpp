#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "faec/numerics/buffer.hpp"
#include "faec/numerics/ops.hpp"
#include "faec/transceiver/layers.hpp"

namespace faec {

using MessageSequence = std::vector<std::size_t>;
using MessageBatch = std::vector<MessageSequence>;

enum class ModelKind { ffnn, brnn };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct Architecture {
  ModelKind kind = ModelKind::ffnn;
  std::size_t messages = 64;           // M, a power of two >= 2
  std::size_t samples_per_block = 12;  // n
  std::vector<std::size_t> encoder_hidden{128, 128};  // FFNN only
  std::vector<std::size_t> decoder_hidden{128, 128};  // FFNN only
  Activation hidden_activation = Activation::relu;
  std::size_t brnn_hidden = 64;  // H per direction
  Merge tx_merge = Merge::average;
  Merge rx_merge = Merge::concat;

  std::size_t bits_per_message() const;
  void validate() const;
  friend bool operator==(const Architecture&, const Architecture&) = default;
};

RealBuffer one_hot(std::size_t message, std::size_t messages);

struct InitOptions {
  // Zero the decoder's output projection so the untrained receiver emits
  // uniform probabilities (initial loss exactly ln M).
  bool zero_decoder_output = true;
};

// Learnable transmitter/receiver pair.
//
// FFNN: one-hot(m) -> encoder stack -> n samples in [0, 1] per block, and
// n received samples -> decoder stack -> M logits, block by block.
// BRNN: one-hot sequence -> BrnnCell (tx merge) -> shared per-step
// projection with clipped_relu01; received blocks -> BrnnCell (rx merge) ->
// shared per-step projection to M logits.
//
// Batched layouts: waveforms are [B x T*n] with blocks in time order;
// logits/probabilities are [B*T x M] with row b*T + t.
class Transceiver {
 public:
  struct EncodeCache {
    std::size_t batch = 0;
    std::size_t blocks = 0;
    FfnnStack::Cache ffnn;
    BrnnCell::Cache cell;
    RealBuffer projection_in;   // [T*B x H'] time-major
    RealBuffer projection_out;  // [T*B x n]
  };
  struct DecodeCache {
    std::size_t batch = 0;
    std::size_t blocks = 0;
    FfnnStack::Cache ffnn;
    BrnnCell::Cache cell;
    RealBuffer projection_in;  // [T*B x H']
  };

  Transceiver() = default;
  explicit Transceiver(const Architecture& arch);  // all parameters zero

  static Transceiver create(const Architecture& arch, std::uint64_t seed, InitOptions options = {});

  const Architecture& architecture() const { return arch_; }
  ModelKind kind() const { return arch_.kind; }
  std::size_t messages() const { return arch_.messages; }
  std::size_t samples_per_block() const { return arch_.samples_per_block; }

  // Declaration order; this is the checkpoint serialization order.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t parameter_count() const;
  void zero_grad();

  RealBuffer encode(const MessageBatch& batch, EncodeCache* cache = nullptr) const;
  void encode_backward(const EncodeCache& cache, const RealBuffer& grad_tx);

  RealBuffer decode_logits(const RealBuffer& rx, std::size_t blocks,
                           DecodeCache* cache = nullptr) const;
  RealBuffer decode_backward(const DecodeCache& cache, const RealBuffer& grad_logits);
  // Softmax of decode_logits.
  RealBuffer decode(const RealBuffer& rx, std::size_t blocks) const;

  // Single-sequence conveniences.
  std::vector<double> encode_sequence(std::span<const std::size_t> messages) const;
  // Probabilities [blocks x M] for one received window of blocks*n samples.
  RealBuffer decode_window(std::span<const double> rx) const;

  // Direct access for tests and serialization.
  FfnnStack& ffnn_encoder() { return ffnn_encoder_; }
  FfnnStack& ffnn_decoder() { return ffnn_decoder_; }
  BrnnCell& tx_cell() { return tx_cell_; }
  BrnnCell& rx_cell() { return rx_cell_; }
  DenseLayer& tx_projection() { return tx_projection_; }
  DenseLayer& rx_projection() { return rx_projection_; }

 private:
  Architecture arch_;
  FfnnStack ffnn_encoder_;
  FfnnStack ffnn_decoder_;
  BrnnCell tx_cell_;
  DenseLayer tx_projection_;
  BrnnCell rx_cell_;
  DenseLayer rx_projection_;
};

}  // namespace faec
