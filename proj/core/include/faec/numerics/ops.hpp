#pragma once

#include <cstddef>
#include <span>
#include <string_view>

#include "faec/numerics/buffer.hpp"

namespace faec {

enum class Activation { relu, clipped_relu01, identity };

std::string_view to_string(Activation kind);
Activation parse_activation(std::string_view name);

// Elementwise activation. Derivatives use subgradient 0 at the kinks.
RealBuffer activation(const RealBuffer& x, Activation kind);
void activate_inplace(std::span<double> x, Activation kind);
// grad <- grad * alpha'(.) where the derivative is recovered from the
// activation output (exact for all supported kinds).
void activation_backward(std::span<const double> output, std::span<double> grad, Activation kind);
double activation_derivative(double output, Activation kind);

// y = x W^T + b for every row of x. x is [in] or [rows x in]; W is [out x in];
// b is [out]. Result is [out] or [rows x out] to match x.
RealBuffer dense(const RealBuffer& x, const Parameter& w, const Parameter& b);
// Accumulates dL/dW and dL/db into w.grad and b.grad and returns dL/dx.
RealBuffer dense_backward(const RealBuffer& x, const RealBuffer& grad_y, Parameter& w,
                          Parameter& b);
// Same as dense_backward but skips the input gradient (first layers).
void dense_backward_params(const RealBuffer& x, const RealBuffer& grad_y, Parameter& w,
                           Parameter& b);

inline constexpr double kLogFloor = 1e-12;

// Row-wise numerically stable softmax (max subtraction). Rows need >= 2 entries.
RealBuffer softmax(const RealBuffer& logits);
// Vector-Jacobian product of softmax for one row.
void softmax_backward(std::span<const double> p, std::span<const double> grad_p,
                      std::span<double> grad_z);

// -ln(p[target] + kLogFloor).
double cross_entropy(std::span<const double> p, std::size_t target);

// Fused softmax + cross-entropy over the rows of `logits`, each row weighted
// by weights[r] (zero-weight rows contribute neither loss nor gradient).
// Returns sum_r weights[r] * CE_r and writes weights[r] * (p_r - onehot(t_r))
// into grad_logits when it is non-empty. probs receives the softmax.
double softmax_cross_entropy(const RealBuffer& logits, std::span<const std::size_t> targets,
                             std::span<const double> weights, RealBuffer* probs,
                             RealBuffer* grad_logits);

}  // namespace faec
