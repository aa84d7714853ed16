#include "faec/transceiver/layers.hpp"

#include <Eigen/Core>
#include <cmath>

#include "faec/errors.hpp"

namespace faec {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

void init_normal(Parameter& p, std::size_t fan_in, RngStream& rng) {
  fill_gaussian(rng, p.value.span(), 1.0 / std::sqrt(static_cast<double>(fan_in)));
}

}  // namespace

DenseLayer::DenseLayer(const std::string& name, std::size_t input_dim, std::size_t output_dim,
                       Activation act)
    : weight(name + ".weight", {output_dim, input_dim}),
      bias(name + ".bias", {output_dim}),
      activation(act) {}

void DenseLayer::initialize(RngStream& rng) {
  init_normal(weight, input_dim(), rng);
  bias.value.fill(0.0);
}

void DenseLayer::zero_initialize() {
  weight.value.fill(0.0);
  bias.value.fill(0.0);
}

RealBuffer DenseLayer::forward(const RealBuffer& x) const {
  RealBuffer y = dense(x, weight, bias);
  activate_inplace(y.span(), activation);
  return y;
}

RealBuffer DenseLayer::backward(const RealBuffer& x, const RealBuffer& y, RealBuffer grad_y,
                                bool need_input_grad) {
  activation_backward(y.span(), grad_y.span(), activation);
  if (!need_input_grad) {
    dense_backward_params(x, grad_y, weight, bias);
    return {};
  }
  return dense_backward(x, grad_y, weight, bias);
}

FfnnStack::FfnnStack(const std::string& prefix, std::size_t input_dim,
                     const std::vector<std::size_t>& hidden, std::size_t output_dim,
                     Activation hidden_act, Activation output_act) {
  std::size_t in = input_dim;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    layers_.emplace_back(prefix + ".layer" + std::to_string(i), in, hidden[i], hidden_act);
    in = hidden[i];
  }
  layers_.emplace_back(prefix + ".layer" + std::to_string(hidden.size()), in, output_dim,
                       output_act);
}

RealBuffer FfnnStack::forward(const RealBuffer& x, Cache* cache) const {
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(x);
  }
  RealBuffer h = x;
  for (const auto& layer : layers_) {
    h = layer.forward(h);
    if (cache) cache->activations.push_back(h);
  }
  return h;
}

RealBuffer FfnnStack::backward(const Cache& cache, const RealBuffer& grad_out, bool need_input_grad) {
  RealBuffer g = grad_out;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const bool want = i > 0 || need_input_grad;
    g = layers_[i].backward(cache.activations[i], cache.activations[i + 1], std::move(g), want);
  }
  return g;
}

std::string_view to_string(Merge merge) { return merge == Merge::concat ? "concat" : "average"; }

Merge parse_merge(std::string_view name) {
  if (name == "concat") return Merge::concat;
  if (name == "average") return Merge::average;
  throw ConfigError("unknown merge mode '" + std::string(name) + "'");
}

BrnnCell::BrnnCell(const std::string& prefix, std::size_t input_dim, std::size_t hidden_dim,
                   Activation act, Merge merge)
    : w_fw(prefix + ".w_fw", {hidden_dim, input_dim + hidden_dim}),
      b_fw(prefix + ".b_fw", {hidden_dim}),
      w_bw(prefix + ".w_bw", {hidden_dim, input_dim + hidden_dim}),
      b_bw(prefix + ".b_bw", {hidden_dim}),
      input_dim_(input_dim),
      hidden_dim_(hidden_dim),
      activation_(act),
      merge_(merge) {}

void BrnnCell::initialize(RngStream& rng) {
  init_normal(w_fw, input_dim_ + hidden_dim_, rng);
  b_fw.value.fill(0.0);
  init_normal(w_bw, input_dim_ + hidden_dim_, rng);
  b_bw.value.fill(0.0);
}

std::vector<RealBuffer> BrnnCell::forward(const std::vector<RealBuffer>& xs, Cache* cache) const {
  if (xs.empty()) throw ConfigError("brnn: empty input sequence");
  const std::size_t steps = xs.size();
  const std::size_t batch = xs.front().rows();
  const auto d = static_cast<Eigen::Index>(input_dim_);
  const auto h = static_cast<Eigen::Index>(hidden_dim_);
  for (const auto& x : xs) {
    if (x.rows() != batch || x.cols() != input_dim_) {
      throw ConfigError("brnn: step input " + shape_string(x.shape()) + " does not match [" +
                        std::to_string(batch) + "x" + std::to_string(input_dim_) + "]");
    }
  }
  const auto b = static_cast<Eigen::Index>(batch);

  auto run = [&](const Parameter& w, const Parameter& bias, bool reverse) {
    std::vector<RealBuffer> states(steps);
    ConstMatrixMap wm(w.value.data(), h, d + h);
    Eigen::Map<const Eigen::RowVectorXd> bv(bias.value.data(), h);
    for (std::size_t k = 0; k < steps; ++k) {
      const std::size_t t = reverse ? steps - 1 - k : k;
      RealBuffer z = RealBuffer::matrix(batch, hidden_dim_);
      MatrixMap zm(z.data(), b, h);
      ConstMatrixMap xm(xs[t].data(), b, d);
      zm.noalias() = xm * wm.leftCols(d).transpose();
      if (k > 0) {
        const RealBuffer& prev = states[reverse ? t + 1 : t - 1];
        ConstMatrixMap pm(prev.data(), b, h);
        zm.noalias() += pm * wm.rightCols(h).transpose();
      }
      zm.rowwise() += bv;
      activate_inplace(z.span(), activation_);
      states[t] = std::move(z);
    }
    return states;
  };

  std::vector<RealBuffer> fw = run(w_fw, b_fw, false);
  std::vector<RealBuffer> bw = run(w_bw, b_bw, true);

  std::vector<RealBuffer> ys(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    RealBuffer y = RealBuffer::matrix(batch, output_dim());
    for (std::size_t r = 0; r < batch; ++r) {
      auto out = y.row(r);
      auto f = fw[t].row(r);
      auto g = bw[t].row(r);
      if (merge_ == Merge::concat) {
        std::copy(f.begin(), f.end(), out.begin());
        std::copy(g.begin(), g.end(), out.begin() + h);
      } else {
        for (std::size_t i = 0; i < hidden_dim_; ++i) out[i] = 0.5 * (f[i] + g[i]);
      }
    }
    ys[t] = std::move(y);
  }
  if (cache) {
    cache->inputs = xs;
    cache->forward_states = std::move(fw);
    cache->backward_states = std::move(bw);
  }
  return ys;
}

std::vector<RealBuffer> BrnnCell::backward(const Cache& cache, const std::vector<RealBuffer>& grad_ys,
                                           bool need_input_grad) {
  const std::size_t steps = cache.inputs.size();
  if (grad_ys.size() != steps) throw ConfigError("brnn backward: sequence length mismatch");
  const std::size_t batch = cache.inputs.front().rows();
  const auto d = static_cast<Eigen::Index>(input_dim_);
  const auto h = static_cast<Eigen::Index>(hidden_dim_);
  const auto b = static_cast<Eigen::Index>(batch);

  std::vector<RealBuffer> dxs;
  if (need_input_grad) {
    dxs.reserve(steps);
    for (const auto& x : cache.inputs) dxs.emplace_back(x.shape());
  }

  auto run = [&](Parameter& w, Parameter& bias, const std::vector<RealBuffer>& states,
                 bool reverse) {
    ConstMatrixMap wm(w.value.data(), h, d + h);
    MatrixMap dw(w.grad.data(), h, d + h);
    Eigen::Map<Eigen::RowVectorXd> db(bias.grad.data(), h);
    RowMatrix carry = RowMatrix::Zero(b, h);
    RowMatrix dz(b, h);
    // Walk the recursion backwards: forward direction from T down to 1,
    // backward direction from 1 up to T.
    for (std::size_t k = 0; k < steps; ++k) {
      const std::size_t t = reverse ? k : steps - 1 - k;
      const RealBuffer& gy = grad_ys[t];
      const RealBuffer& state = states[t];
      for (Eigen::Index r = 0; r < b; ++r) {
        auto gy_row = gy.row(static_cast<std::size_t>(r));
        auto s_row = state.row(static_cast<std::size_t>(r));
        for (Eigen::Index i = 0; i < h; ++i) {
          double g = carry(r, i);
          if (merge_ == Merge::concat) {
            g += gy_row[static_cast<std::size_t>(i + (reverse ? h : 0))];
          } else {
            g += 0.5 * gy_row[static_cast<std::size_t>(i)];
          }
          dz(r, i) = g * activation_derivative(s_row[static_cast<std::size_t>(i)], activation_);
        }
      }
      ConstMatrixMap xm(cache.inputs[t].data(), b, d);
      dw.leftCols(d).noalias() += dz.transpose() * xm;
      db.noalias() += dz.colwise().sum();
      const bool has_prev = reverse ? t + 1 < steps : t > 0;
      if (has_prev) {
        const RealBuffer& prev = states[reverse ? t + 1 : t - 1];
        ConstMatrixMap pm(prev.data(), b, h);
        dw.rightCols(h).noalias() += dz.transpose() * pm;
        carry.noalias() = dz * wm.rightCols(h);
      }
      if (need_input_grad) {
        MatrixMap dx(dxs[t].data(), b, d);
        dx.noalias() += dz * wm.leftCols(d);
      }
    }
  };

  run(w_fw, b_fw, cache.forward_states, false);
  run(w_bw, b_bw, cache.backward_states, true);
  return dxs;
}

}  // namespace faec
