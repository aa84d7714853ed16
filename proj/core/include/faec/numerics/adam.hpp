#pragma once

#include <cstdint>
#include <span>

#include "faec/numerics/buffer.hpp"

namespace faec {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

// One bias-corrected Adam update (step >= 1) of every parameter from its
// current grad. Gradients are left as they are. Throws NumericError before
// touching anything if any gradient is non-finite.
void adam_step(std::span<Parameter* const> params, const AdamConfig& config, std::uint64_t step);

}  // namespace faec
