#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "faec/numerics/buffer.hpp"
#include "faec/numerics/ops.hpp"
#include "faec/numerics/rng.hpp"

namespace faec {

// Affine map followed by an elementwise activation.
struct DenseLayer {
  DenseLayer() = default;
  DenseLayer(const std::string& name, std::size_t input_dim, std::size_t output_dim,
             Activation act);

  Parameter weight;  // [out x in]
  Parameter bias;    // [out]
  Activation activation = Activation::identity;

  std::size_t input_dim() const { return weight.shape()[1]; }
  std::size_t output_dim() const { return weight.shape()[0]; }

  // weight ~ N(0, 1/fan_in), bias = 0.
  void initialize(RngStream& rng);
  void zero_initialize();

  RealBuffer forward(const RealBuffer& x) const;
  // `y` is the forward output for `x`. Accumulates parameter gradients and
  // returns dL/dx (empty when need_input_grad is false).
  RealBuffer backward(const RealBuffer& x, const RealBuffer& y, RealBuffer grad_y,
                      bool need_input_grad);
};

// Feedforward stack h_{k+1} = alpha_k(W_k h_k + b_k).
class FfnnStack {
 public:
  struct Cache {
    std::vector<RealBuffer> activations;  // input, then each layer's output
  };

  FfnnStack() = default;
  FfnnStack(const std::string& prefix, std::size_t input_dim, const std::vector<std::size_t>& hidden,
            std::size_t output_dim, Activation hidden_act, Activation output_act);

  std::size_t input_dim() const { return layers_.front().input_dim(); }
  std::size_t output_dim() const { return layers_.back().output_dim(); }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  RealBuffer forward(const RealBuffer& x, Cache* cache = nullptr) const;
  RealBuffer backward(const Cache& cache, const RealBuffer& grad_out, bool need_input_grad = true);

 private:
  std::vector<DenseLayer> layers_;
};

enum class Merge { concat, average };

std::string_view to_string(Merge merge);
Merge parse_merge(std::string_view name);

// Bidirectional recurrent cell over a batch of equally long sequences:
//   fw_t = alpha(W_fw [x_t; fw_{t-1}] + b_fw),  t = 1..T
//   bw_t = alpha(W_bw [x_t; bw_{t+1}] + b_bw),  t = T..1
//   y_t  = merge(fw_t, bw_t)
// with zero initial states at both ends.
class BrnnCell {
 public:
  struct Cache {
    std::vector<RealBuffer> inputs;
    std::vector<RealBuffer> forward_states;
    std::vector<RealBuffer> backward_states;
  };

  BrnnCell() = default;
  BrnnCell(const std::string& prefix, std::size_t input_dim, std::size_t hidden_dim, Activation act,
           Merge merge);

  Parameter w_fw;  // [H x (D + H)]
  Parameter b_fw;  // [H]
  Parameter w_bw;
  Parameter b_bw;

  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden_dim() const { return hidden_dim_; }
  std::size_t output_dim() const { return merge_ == Merge::concat ? 2 * hidden_dim_ : hidden_dim_; }
  Activation activation() const { return activation_; }
  Merge merge() const { return merge_; }

  void initialize(RngStream& rng);

  // xs[t] is [B x D] (or a single [D] vector); returns y_t of [B x out].
  std::vector<RealBuffer> forward(const std::vector<RealBuffer>& xs, Cache* cache = nullptr) const;
  // Backpropagation through time. Returns dL/dx_t (empty if not requested).
  std::vector<RealBuffer> backward(const Cache& cache, const std::vector<RealBuffer>& grad_ys,
                                   bool need_input_grad);

 private:
  std::size_t input_dim_ = 0;
  std::size_t hidden_dim_ = 0;
  Activation activation_ = Activation::relu;
  Merge merge_ = Merge::concat;
};

}  // namespace faec
