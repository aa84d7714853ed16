#include "faec/transceiver/transceiver.hpp"

#include <bit>
#include <string>

#include "faec/errors.hpp"
#include "faec/numerics/rng.hpp"

namespace faec {

namespace {

// [T*B x c] time-major rows <-> per-step [B x c] buffers.
std::vector<RealBuffer> split_steps(const RealBuffer& stacked, std::size_t steps) {
  const std::size_t batch = stacked.rows() / steps;
  const std::size_t cols = stacked.cols();
  std::vector<RealBuffer> out;
  out.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const double* src = stacked.data() + t * batch * cols;
    out.emplace_back(Shape{batch, cols}, std::vector<double>(src, src + batch * cols));
  }
  return out;
}

RealBuffer stack_steps(const std::vector<RealBuffer>& steps) {
  const std::size_t batch = steps.front().rows();
  const std::size_t cols = steps.front().cols();
  RealBuffer out = RealBuffer::matrix(steps.size() * batch, cols);
  for (std::size_t t = 0; t < steps.size(); ++t) {
    std::copy(steps[t].values().begin(), steps[t].values().end(), out.data() + t * batch * cols);
  }
  return out;
}

// Row t*B + b <-> row b*T + t.
RealBuffer time_to_batch_major(const RealBuffer& x, std::size_t batch, std::size_t steps) {
  RealBuffer out(x.shape());
  const std::size_t cols = x.cols();
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t b = 0; b < batch; ++b) {
      auto src = x.row(t * batch + b);
      std::copy(src.begin(), src.end(), out.data() + (b * steps + t) * cols);
    }
  }
  return out;
}

RealBuffer batch_to_time_major(const RealBuffer& x, std::size_t batch, std::size_t steps) {
  RealBuffer out(x.shape());
  const std::size_t cols = x.cols();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < steps; ++t) {
      auto src = x.row(b * steps + t);
      std::copy(src.begin(), src.end(), out.data() + (t * batch + b) * cols);
    }
  }
  return out;
}

std::size_t check_batch(const MessageBatch& batch, std::size_t messages) {
  if (batch.empty()) throw ConfigError("encode: empty batch");
  const std::size_t steps = batch.front().size();
  if (steps == 0) throw ConfigError("encode: empty message sequence");
  for (const auto& seq : batch) {
    if (seq.size() != steps) throw ConfigError("encode: sequences in a batch must be equally long");
    for (auto m : seq) {
      if (m >= messages) {
        throw ContractError("encode: message " + std::to_string(m) + " outside [0, " +
                            std::to_string(messages) + ")");
      }
    }
  }
  return steps;
}

}  // namespace

std::string_view to_string(ModelKind kind) { return kind == ModelKind::ffnn ? "ffnn" : "brnn"; }

ModelKind parse_model_kind(std::string_view name) {
  if (name == "ffnn") return ModelKind::ffnn;
  if (name == "brnn" || name == "sbrnn") return ModelKind::brnn;
  throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

std::size_t Architecture::bits_per_message() const {
  return static_cast<std::size_t>(std::countr_zero(messages));
}

void Architecture::validate() const {
  if (messages < 2 || !std::has_single_bit(messages)) {
    throw ConfigError("model.messages must be a power of two >= 2");
  }
  if (samples_per_block < 1) throw ConfigError("model.samples_per_block must be >= 1");
  if (kind == ModelKind::ffnn) {
    for (auto h : encoder_hidden) {
      if (h == 0) throw ConfigError("model.encoder_hidden entries must be >= 1");
    }
    for (auto h : decoder_hidden) {
      if (h == 0) throw ConfigError("model.decoder_hidden entries must be >= 1");
    }
  } else if (brnn_hidden < 1) {
    throw ConfigError("model.brnn_hidden must be >= 1");
  }
}

RealBuffer one_hot(std::size_t message, std::size_t messages) {
  if (message >= messages) {
    throw ContractError("one_hot: message " + std::to_string(message) + " outside [0, " +
                        std::to_string(messages) + ")");
  }
  RealBuffer v({messages});
  v[message] = 1.0;
  return v;
}

Transceiver::Transceiver(const Architecture& arch) : arch_(arch) {
  arch_.validate();
  const std::size_t m = arch_.messages;
  const std::size_t n = arch_.samples_per_block;
  if (arch_.kind == ModelKind::ffnn) {
    ffnn_encoder_ = FfnnStack("encoder", m, arch_.encoder_hidden, n, arch_.hidden_activation,
                              Activation::clipped_relu01);
    ffnn_decoder_ = FfnnStack("decoder", n, arch_.decoder_hidden, m, arch_.hidden_activation,
                              Activation::identity);
  } else {
    const std::size_t h = arch_.brnn_hidden;
    tx_cell_ = BrnnCell("encoder.cell", m, h, arch_.hidden_activation, arch_.tx_merge);
    tx_projection_ = DenseLayer("encoder.projection", tx_cell_.output_dim(), n,
                                Activation::clipped_relu01);
    rx_cell_ = BrnnCell("decoder.cell", n, h, arch_.hidden_activation, arch_.rx_merge);
    rx_projection_ = DenseLayer("decoder.projection", rx_cell_.output_dim(), m,
                                Activation::identity);
  }
}

Transceiver Transceiver::create(const Architecture& arch, std::uint64_t seed, InitOptions options) {
  Transceiver t(arch);
  RngStream rng = RngStream::derive(seed, StreamPurpose::init);
  if (arch.kind == ModelKind::ffnn) {
    for (auto& layer : t.ffnn_encoder_.layers()) layer.initialize(rng);
    for (auto& layer : t.ffnn_decoder_.layers()) layer.initialize(rng);
    if (options.zero_decoder_output) t.ffnn_decoder_.layers().back().zero_initialize();
  } else {
    t.tx_cell_.initialize(rng);
    t.tx_projection_.initialize(rng);
    t.rx_cell_.initialize(rng);
    t.rx_projection_.initialize(rng);
    if (options.zero_decoder_output) t.rx_projection_.zero_initialize();
  }
  return t;
}

std::vector<Parameter*> Transceiver::parameters() {
  std::vector<Parameter*> out;
  if (arch_.kind == ModelKind::ffnn) {
    for (auto* stack : {&ffnn_encoder_, &ffnn_decoder_}) {
      for (auto& layer : stack->layers()) {
        out.push_back(&layer.weight);
        out.push_back(&layer.bias);
      }
    }
  } else {
    out = {&tx_cell_.w_fw, &tx_cell_.b_fw, &tx_cell_.w_bw, &tx_cell_.b_bw,
           &tx_projection_.weight, &tx_projection_.bias,
           &rx_cell_.w_fw, &rx_cell_.b_fw, &rx_cell_.w_bw, &rx_cell_.b_bw,
           &rx_projection_.weight, &rx_projection_.bias};
  }
  return out;
}

std::vector<const Parameter*> Transceiver::parameters() const {
  auto mut = const_cast<Transceiver*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

std::size_t Transceiver::parameter_count() const {
  std::size_t total = 0;
  for (const auto* p : parameters()) total += p->size();
  return total;
}

void Transceiver::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

RealBuffer Transceiver::encode(const MessageBatch& batch, EncodeCache* cache) const {
  const std::size_t m = arch_.messages;
  const std::size_t n = arch_.samples_per_block;
  const std::size_t steps = check_batch(batch, m);
  const std::size_t b = batch.size();
  if (cache) {
    cache->batch = b;
    cache->blocks = steps;
  }

  if (arch_.kind == ModelKind::ffnn) {
    RealBuffer x = RealBuffer::matrix(b * steps, m);
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t t = 0; t < steps; ++t) x(i * steps + t, batch[i][t]) = 1.0;
    }
    RealBuffer y = ffnn_encoder_.forward(x, cache ? &cache->ffnn : nullptr);
    y.reshape({b, steps * n});
    return y;
  }

  std::vector<RealBuffer> xs;
  xs.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    RealBuffer x = RealBuffer::matrix(b, m);
    for (std::size_t i = 0; i < b; ++i) x(i, batch[i][t]) = 1.0;
    xs.push_back(std::move(x));
  }
  RealBuffer hidden = stack_steps(tx_cell_.forward(xs, cache ? &cache->cell : nullptr));
  RealBuffer out = tx_projection_.forward(hidden);
  RealBuffer tx = time_to_batch_major(out, b, steps);
  tx.reshape({b, steps * n});
  if (cache) {
    cache->projection_in = std::move(hidden);
    cache->projection_out = std::move(out);
  }
  return tx;
}

void Transceiver::encode_backward(const EncodeCache& cache, const RealBuffer& grad_tx) {
  const std::size_t n = arch_.samples_per_block;
  RealBuffer g = grad_tx;
  g.reshape({cache.batch * cache.blocks, n});
  if (arch_.kind == ModelKind::ffnn) {
    ffnn_encoder_.backward(cache.ffnn, g, false);
    return;
  }
  RealBuffer g_tm = batch_to_time_major(g, cache.batch, cache.blocks);
  RealBuffer g_hidden =
      tx_projection_.backward(cache.projection_in, cache.projection_out, std::move(g_tm), true);
  tx_cell_.backward(cache.cell, split_steps(g_hidden, cache.blocks), false);
}

RealBuffer Transceiver::decode_logits(const RealBuffer& rx, std::size_t blocks,
                                      DecodeCache* cache) const {
  const std::size_t n = arch_.samples_per_block;
  if (blocks < 1) throw ConfigError("decode: window shorter than one block");
  if (rx.size() == 0 || rx.size() % (blocks * n) != 0) {
    throw ConfigError("decode: received buffer of " + std::to_string(rx.size()) +
                      " samples is not a whole number of " + std::to_string(blocks) + "-block windows");
  }
  const std::size_t b = rx.size() / (blocks * n);
  if (cache) {
    cache->batch = b;
    cache->blocks = blocks;
  }
  if (arch_.kind == ModelKind::ffnn) {
    RealBuffer x(Shape{b * blocks, n}, rx.values());
    return ffnn_decoder_.forward(x, cache ? &cache->ffnn : nullptr);
  }
  std::vector<RealBuffer> xs;
  xs.reserve(blocks);
  for (std::size_t t = 0; t < blocks; ++t) {
    RealBuffer x = RealBuffer::matrix(b, n);
    for (std::size_t i = 0; i < b; ++i) {
      const double* src = rx.data() + i * blocks * n + t * n;
      std::copy(src, src + n, x.data() + i * n);
    }
    xs.push_back(std::move(x));
  }
  RealBuffer hidden = stack_steps(rx_cell_.forward(xs, cache ? &cache->cell : nullptr));
  RealBuffer logits = rx_projection_.forward(hidden);
  if (cache) cache->projection_in = std::move(hidden);
  return time_to_batch_major(logits, b, blocks);
}

RealBuffer Transceiver::decode_backward(const DecodeCache& cache, const RealBuffer& grad_logits) {
  const std::size_t n = arch_.samples_per_block;
  const std::size_t b = cache.batch;
  const std::size_t steps = cache.blocks;
  if (arch_.kind == ModelKind::ffnn) {
    RealBuffer g = ffnn_decoder_.backward(cache.ffnn, grad_logits, true);
    g.reshape({b, steps * n});
    return g;
  }
  RealBuffer g_tm = batch_to_time_major(grad_logits, b, steps);
  // The projection is linear, so its output is not needed for the backward pass.
  RealBuffer g_hidden = rx_projection_.backward(cache.projection_in, RealBuffer{}, std::move(g_tm), true);
  auto dxs = rx_cell_.backward(cache.cell, split_steps(g_hidden, steps), true);
  RealBuffer grad_rx = RealBuffer::matrix(b, steps * n);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < b; ++i) {
      auto src = dxs[t].row(i);
      std::copy(src.begin(), src.end(), grad_rx.data() + i * steps * n + t * n);
    }
  }
  return grad_rx;
}

RealBuffer Transceiver::decode(const RealBuffer& rx, std::size_t blocks) const {
  return softmax(decode_logits(rx, blocks));
}

std::vector<double> Transceiver::encode_sequence(std::span<const std::size_t> messages) const {
  MessageBatch batch{MessageSequence(messages.begin(), messages.end())};
  return encode(batch).values();
}

RealBuffer Transceiver::decode_window(std::span<const double> rx) const {
  const std::size_t n = arch_.samples_per_block;
  if (rx.size() < n || rx.size() % n != 0) {
    throw ConfigError("decode_window: window must hold a whole number (>= 1) of blocks");
  }
  RealBuffer r(Shape{1, rx.size()}, std::vector<double>(rx.begin(), rx.end()));
  return decode(r, rx.size() / n);
}

}  // namespace faec
