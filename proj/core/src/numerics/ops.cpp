#include "faec/numerics/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "faec/errors.hpp"

namespace faec {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

void check_dense_shapes(const RealBuffer& x, const Parameter& w, const Parameter& b) {
  if (w.shape().size() != 2 || b.shape().size() != 1 || b.shape()[0] != w.shape()[0]) {
    throw ConfigError("dense: weight " + shape_string(w.shape()) + " and bias " +
                      shape_string(b.shape()) + " do not conform");
  }
  if (x.shape().empty() || x.shape().size() > 2 || x.cols() != w.shape()[1]) {
    throw ConfigError("dense: input " + shape_string(x.shape()) + " does not match weight " +
                      shape_string(w.shape()));
  }
}

}  // namespace

std::string_view to_string(Activation kind) {
  switch (kind) {
    case Activation::relu: return "relu";
    case Activation::clipped_relu01: return "clipped_relu01";
    case Activation::identity: return "identity";
  }
  return "unknown";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "clipped_relu01") return Activation::clipped_relu01;
  if (name == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

void activate_inplace(std::span<double> x, Activation kind) {
  switch (kind) {
    case Activation::relu:
      for (auto& v : x) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::clipped_relu01:
      for (auto& v : x) v = v > 0.0 ? (v < 1.0 ? v : 1.0) : 0.0;
      break;
    case Activation::identity:
      break;
  }
}

RealBuffer activation(const RealBuffer& x, Activation kind) {
  RealBuffer y = x;
  activate_inplace(y.span(), kind);
  return y;
}

double activation_derivative(double output, Activation kind) {
  switch (kind) {
    case Activation::relu: return output > 0.0 ? 1.0 : 0.0;
    case Activation::clipped_relu01: return (output > 0.0 && output < 1.0) ? 1.0 : 0.0;
    case Activation::identity: return 1.0;
  }
  return 0.0;
}

void activation_backward(std::span<const double> output, std::span<double> grad,
                         Activation kind) {
  if (kind == Activation::identity) return;
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= activation_derivative(output[i], kind);
}

RealBuffer dense(const RealBuffer& x, const Parameter& w, const Parameter& b) {
  check_dense_shapes(x, w, b);
  const auto rows = static_cast<Eigen::Index>(x.rows());
  const auto in = static_cast<Eigen::Index>(w.shape()[1]);
  const auto out = static_cast<Eigen::Index>(w.shape()[0]);
  RealBuffer y = x.shape().size() == 1 ? RealBuffer({w.shape()[0]})
                                       : RealBuffer::matrix(x.rows(), w.shape()[0]);
  MatrixMap ym(y.data(), rows, out);
  ConstMatrixMap xm(x.data(), rows, in);
  ConstMatrixMap wm(w.value.data(), out, in);
  ConstVectorMap bm(b.value.data(), out);
  ym.noalias() = xm * wm.transpose();
  ym.rowwise() += bm.transpose();
  return y;
}

void dense_backward_params(const RealBuffer& x, const RealBuffer& grad_y, Parameter& w,
                           Parameter& b) {
  check_dense_shapes(x, w, b);
  const auto rows = static_cast<Eigen::Index>(x.rows());
  const auto in = static_cast<Eigen::Index>(w.shape()[1]);
  const auto out = static_cast<Eigen::Index>(w.shape()[0]);
  if (grad_y.size() != static_cast<std::size_t>(rows * out)) {
    throw ConfigError("dense_backward: gradient " + shape_string(grad_y.shape()) +
                      " does not match output rows x " + std::to_string(out));
  }
  ConstMatrixMap xm(x.data(), rows, in);
  ConstMatrixMap gm(grad_y.data(), rows, out);
  MatrixMap dw(w.grad.data(), out, in);
  VectorMap db(b.grad.data(), out);
  dw.noalias() += gm.transpose() * xm;
  db.noalias() += gm.colwise().sum().transpose();
}

RealBuffer dense_backward(const RealBuffer& x, const RealBuffer& grad_y, Parameter& w,
                          Parameter& b) {
  dense_backward_params(x, grad_y, w, b);
  const auto rows = static_cast<Eigen::Index>(x.rows());
  const auto in = static_cast<Eigen::Index>(w.shape()[1]);
  const auto out = static_cast<Eigen::Index>(w.shape()[0]);
  RealBuffer dx(x.shape());
  MatrixMap dxm(dx.data(), rows, in);
  ConstMatrixMap gm(grad_y.data(), rows, out);
  ConstMatrixMap wm(w.value.data(), out, in);
  dxm.noalias() = gm * wm;
  return dx;
}

RealBuffer softmax(const RealBuffer& logits) {
  if (logits.cols() < 2) throw ConfigError("softmax: need at least 2 classes");
  RealBuffer p(logits.shape());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto z = logits.row(r);
    auto out = p.row(r);
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      out[i] = std::exp(z[i] - zmax);
      sum += out[i];
    }
    for (auto& v : out) v /= sum;
  }
  return p;
}

void softmax_backward(std::span<const double> p, std::span<const double> grad_p,
                      std::span<double> grad_z) {
  double dot = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) dot += p[i] * grad_p[i];
  for (std::size_t i = 0; i < p.size(); ++i) grad_z[i] = p[i] * (grad_p[i] - dot);
}

double cross_entropy(std::span<const double> p, std::size_t target) {
  if (target >= p.size()) {
    throw ContractError("cross_entropy: target " + std::to_string(target) +
                        " outside [0, " + std::to_string(p.size()) + ")");
  }
  return -std::log(p[target] + kLogFloor);
}

double softmax_cross_entropy(const RealBuffer& logits, std::span<const std::size_t> targets,
                             std::span<const double> weights, RealBuffer* probs,
                             RealBuffer* grad_logits) {
  const std::size_t rows = logits.rows();
  if (targets.size() != rows || weights.size() != rows) {
    throw ConfigError("softmax_cross_entropy: " + std::to_string(rows) + " rows but " +
                      std::to_string(targets.size()) + " targets and " +
                      std::to_string(weights.size()) + " weights");
  }
  RealBuffer p = softmax(logits);
  if (grad_logits) *grad_logits = RealBuffer(logits.shape());
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    auto pr = p.row(r);
    if (targets[r] >= pr.size()) {
      throw ContractError("softmax_cross_entropy: target " + std::to_string(targets[r]) +
                          " outside [0, " + std::to_string(pr.size()) + ")");
    }
    if (weights[r] == 0.0) {
      continue;
    }
    // log-sum-exp form, exact where p would underflow.
    auto z = logits.row(r);
    const double mx = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - mx);
    loss += weights[r] * (std::log(s) - (z[targets[r]] - mx));
    if (grad_logits) {
      auto g = grad_logits->row(r);
      for (std::size_t i = 0; i < pr.size(); ++i) g[i] = weights[r] * pr[i];
      g[targets[r]] -= weights[r];
    }
  }
  if (probs) *probs = std::move(p);
  return loss;
}

}  // namespace faec
