#include "faec/trainer/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "faec/errors.hpp"
#include "faec/numerics/ops.hpp"

namespace faec {

namespace {

std::size_t argmax(std::span<const double> p) {
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (seq_len < 1) throw ConfigError("train.seq_len must be >= 1");
  if (seq_len <= 2 * edge_exclusion) throw ConfigError("train.seq_len must exceed 2 * edge_exclusion");
  if (train_window > seq_len) throw ConfigError("train.train_window must be <= train.seq_len");
  if (eval_interval < 1) throw ConfigError("train.eval_interval must be >= 1");
  if (heldout_sequences < 1) throw ConfigError("train.heldout_sequences must be >= 1");
  adam.validate();
  channel.validate();
}

MessageBatch sample_batch(RngStream& rng, std::size_t batch_size, std::size_t seq_len,
                          std::size_t messages) {
  if (messages < 1) throw ConfigError("sample_batch: need at least one message");
  MessageBatch batch(batch_size, MessageSequence(seq_len));
  for (auto& seq : batch) {
    for (auto& m : seq) m = static_cast<std::size_t>(rng.uniform_index(messages));
  }
  return batch;
}

EndToEndLoss::EndToEndLoss(const ChannelConfig& channel, std::size_t edge_exclusion,
                           std::size_t guard_blocks, std::size_t window)
    : pass_(channel), edge_exclusion_(edge_exclusion), guard_blocks_(guard_blocks), window_(window) {}

double EndToEndLoss::block_weight(std::size_t t, std::size_t blocks, std::size_t batch) const {
  if (t < edge_exclusion_ || t + edge_exclusion_ >= blocks) return 0.0;
  return 1.0 / static_cast<double>(batch * (blocks - 2 * edge_exclusion_));
}

LossResult EndToEndLoss::evaluate(Transceiver& model, const MessageBatch& batch,
                                  RngStream& noise_rng, bool want_gradient) {
  if (batch.empty()) throw ConfigError("e2e_loss: empty batch");
  const std::size_t len = padded_samples(batch.front().size(), model.samples_per_block());
  std::vector<Waveform> noise(batch.size(), Waveform(len));
  for (auto& n : noise) fill_gaussian(noise_rng, n, pass_.config().noise_sigma);
  return evaluate_with_noise(model, batch, noise, want_gradient);
}

LossResult EndToEndLoss::evaluate_with_noise(Transceiver& model, const MessageBatch& batch,
                                             const std::vector<Waveform>& noise,
                                             bool want_gradient) {
  const std::size_t b = batch.size();
  if (b == 0) throw ConfigError("e2e_loss: empty batch");
  const std::size_t steps = batch.front().size();
  if (steps <= 2 * edge_exclusion_) {
    throw ConfigError("e2e_loss: sequence of " + std::to_string(steps) +
                      " blocks leaves nothing after edge exclusion");
  }
  const std::size_t n = model.samples_per_block();
  const std::size_t body = steps * n;
  const std::size_t guard = guard_blocks_ * n;
  const std::size_t len = body + 2 * guard;
  if (noise.size() != b) throw ConfigError("e2e_loss: one noise vector per sequence required");

  Transceiver::EncodeCache enc;
  const RealBuffer tx = model.encode(batch, want_gradient ? &enc : nullptr);

  std::vector<ChannelTrace> traces(b);
  RealBuffer rx = RealBuffer::matrix(b, body);
  Waveform padded(len);
  for (std::size_t i = 0; i < b; ++i) {
    std::fill(padded.begin(), padded.end(), 0.0);
    auto row = tx.row(i);
    std::copy(row.begin(), row.end(), padded.begin() + static_cast<std::ptrdiff_t>(guard));
    if (noise[i].size() != len) throw ConfigError("e2e_loss: noise length mismatch");
    Waveform y = pass_.forward_with_noise(padded, noise[i], want_gradient ? &traces[i] : nullptr);
    std::copy(y.begin() + static_cast<std::ptrdiff_t>(guard),
              y.begin() + static_cast<std::ptrdiff_t>(guard + body), rx.data() + i * body);
  }

  LossResult result;
  RealBuffer grad_rx;
  const bool sliding = model.kind() == ModelKind::brnn && window_ > 0 && window_ < steps;
  result.loss = sliding ? sliding_decode_loss(model, batch, rx, want_gradient, &grad_rx, result)
                        : decode_loss(model, batch, rx, want_gradient, &grad_rx, result);
  if (!std::isfinite(result.loss)) throw NumericError("e2e_loss: non-finite loss");
  if (!want_gradient) return result;

  RealBuffer grad_tx = RealBuffer::matrix(b, body);
  Waveform g(len);
  for (std::size_t i = 0; i < b; ++i) {
    std::fill(g.begin(), g.end(), 0.0);
    auto row = grad_rx.row(i);
    std::copy(row.begin(), row.end(), g.begin() + static_cast<std::ptrdiff_t>(guard));
    Waveform gt = pass_.backward(traces[i], g);
    std::copy(gt.begin() + static_cast<std::ptrdiff_t>(guard),
              gt.begin() + static_cast<std::ptrdiff_t>(guard + body), grad_tx.data() + i * body);
  }
  model.encode_backward(enc, grad_tx);
  return result;
}

double EndToEndLoss::decode_loss(Transceiver& model, const MessageBatch& batch, const RealBuffer& rx,
                                 bool want_gradient, RealBuffer* grad_rx, LossResult& result) const {
  const std::size_t b = batch.size();
  const std::size_t steps = batch.front().size();
  Transceiver::DecodeCache dec;
  const RealBuffer logits = model.decode_logits(rx, steps, want_gradient ? &dec : nullptr);

  std::vector<std::size_t> targets(b * steps);
  std::vector<double> weights(b * steps);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t t = 0; t < steps; ++t) {
      targets[i * steps + t] = batch[i][t];
      weights[i * steps + t] = block_weight(t, steps, b);
    }
  }
  RealBuffer probs;
  RealBuffer grad_logits;
  const double loss = softmax_cross_entropy(logits, targets, weights, &probs,
                                            want_gradient ? &grad_logits : nullptr);
  for (std::size_t r = 0; r < targets.size(); ++r) {
    if (weights[r] == 0.0) continue;
    result.block_errors += argmax(probs.row(r)) != targets[r] ? 1 : 0;
    ++result.blocks;
  }
  if (want_gradient) *grad_rx = model.decode_backward(dec, grad_logits);
  return loss;
}

double EndToEndLoss::sliding_decode_loss(Transceiver& model, const MessageBatch& batch,
                                         const RealBuffer& rx, bool want_gradient,
                                         RealBuffer* grad_rx, LossResult& result) const {
  const std::size_t b = batch.size();
  const std::size_t steps = batch.front().size();
  const std::size_t n = model.samples_per_block();
  const std::size_t m = model.messages();
  const std::size_t w = window_;
  const std::size_t starts = steps - w + 1;

  // All windows of all sequences as one decoder batch, row (i*S + s).
  RealBuffer windows = RealBuffer::matrix(b * starts, w * n);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t s = 0; s < starts; ++s) {
      const double* src = rx.data() + i * steps * n + s * n;
      std::copy(src, src + w * n, windows.data() + (i * starts + s) * w * n);
    }
  }
  Transceiver::DecodeCache dec;
  const RealBuffer p = softmax(model.decode_logits(windows, w, want_gradient ? &dec : nullptr));

  std::vector<double> coverage(steps, 0.0);
  for (std::size_t s = 0; s < starts; ++s) {
    for (std::size_t k = 0; k < w; ++k) coverage[s + k] += 1.0;
  }
  RealBuffer avg = RealBuffer::matrix(b * steps, m);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t s = 0; s < starts; ++s) {
      for (std::size_t k = 0; k < w; ++k) {
        auto src = p.row((i * starts + s) * w + k);
        auto dst = avg.row(i * steps + s + k);
        for (std::size_t j = 0; j < m; ++j) dst[j] += src[j];
      }
    }
  }
  double loss = 0.0;
  // dL/d avg[target] for every counted block; zero elsewhere.
  std::vector<double> grad_avg(b * steps, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t t = 0; t < steps; ++t) {
      auto row = avg.row(i * steps + t);
      for (auto& v : row) v /= coverage[t];
      const double weight = block_weight(t, steps, b);
      if (weight == 0.0) continue;
      const std::size_t target = batch[i][t];
      loss += weight * cross_entropy(row, target);
      grad_avg[i * steps + t] = -weight / (row[target] + kLogFloor);
      result.block_errors += argmax(row) != target ? 1 : 0;
      ++result.blocks;
    }
  }
  if (!want_gradient) return loss;

  RealBuffer grad_logits(p.shape());
  std::vector<double> grad_p(m);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t s = 0; s < starts; ++s) {
      for (std::size_t k = 0; k < w; ++k) {
        const std::size_t t = s + k;
        const double g = grad_avg[i * steps + t];
        if (g == 0.0) continue;
        const std::size_t r = (i * starts + s) * w + k;
        std::fill(grad_p.begin(), grad_p.end(), 0.0);
        grad_p[batch[i][t]] = g / coverage[t];
        softmax_backward(p.row(r), grad_p, grad_logits.row(r));
      }
    }
  }
  const RealBuffer grad_windows = model.decode_backward(dec, grad_logits);
  *grad_rx = RealBuffer::matrix(b, steps * n);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t s = 0; s < starts; ++s) {
      auto src = grad_windows.row(i * starts + s);
      double* dst = grad_rx->data() + i * steps * n + s * n;
      for (std::size_t j = 0; j < w * n; ++j) dst[j] += src[j];
    }
  }
  return loss;
}

TrainReport train(Transceiver& model, const TrainConfig& cfg, const TrainProgress& progress) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  TrainReport report;
  if (cfg.iterations == 0) return report;

  EndToEndLoss objective(cfg.channel, cfg.edge_exclusion, cfg.guard_blocks, cfg.train_window);
  auto params = model.parameters();
  const std::size_t m = model.messages();

  RngStream heldout_rng = RngStream::derive(cfg.seed, StreamPurpose::heldout_messages);
  const MessageBatch heldout = sample_batch(heldout_rng, cfg.heldout_sequences, cfg.seq_len, m);

  double interval_sum = 0.0;
  std::uint64_t interval_steps = 0;
  std::uint64_t diverged_records = 0;

  for (std::uint64_t it = 1; it <= cfg.iterations; ++it) {
    RngStream msg_rng = RngStream::derive(cfg.seed, StreamPurpose::messages, {it});
    RngStream noise_rng = RngStream::derive(cfg.seed, StreamPurpose::noise, {it});
    const MessageBatch batch = sample_batch(msg_rng, cfg.batch_size, cfg.seq_len, m);

    model.zero_grad();
    const LossResult step = objective.evaluate(model, batch, noise_rng, true);
    if (it == 1) report.initial_loss = step.loss;
    adam_step(params, cfg.adam, it);
    model.zero_grad();

    interval_sum += step.loss;
    ++interval_steps;
    if (it % cfg.eval_interval == 0 || it == cfg.iterations) {
      RngStream heldout_noise = RngStream::derive(cfg.seed, StreamPurpose::heldout_noise);
      const LossResult eval = objective.evaluate(model, heldout, heldout_noise, false);
      TrainRecord record{it, interval_sum / static_cast<double>(interval_steps),
                         static_cast<double>(eval.block_errors) / static_cast<double>(eval.blocks)};
      report.records.push_back(record);
      if (progress) progress(record);
      interval_sum = 0.0;
      interval_steps = 0;

      diverged_records = record.loss > 10.0 * report.initial_loss ? diverged_records + 1 : 0;
      if (diverged_records >= 100) {
        throw NumericError("train: loss above 10x its initial value for 100 consecutive records");
      }
    }
  }
  report.final_loss = report.records.back().loss;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace faec
