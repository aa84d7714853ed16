#include "faec/numerics/adam.hpp"

#include <cmath>
#include <string>

#include "faec/errors.hpp"

namespace faec {

void AdamConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) {
    throw ConfigError("train.learning_rate must be finite and >= 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("train.beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("train.beta2 must be in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("train.epsilon must be > 0");
}

void adam_step(std::span<Parameter* const> params, const AdamConfig& config, std::uint64_t step) {
  if (step < 1) throw ConfigError("adam_step: step count starts at 1");
  for (const Parameter* p : params) {
    if (!p->grad.all_finite()) {
      throw NumericError("adam_step: non-finite gradient in parameter '" + p->name + "'");
    }
  }
  const double t = static_cast<double>(step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (Parameter* p : params) {
    double* theta = p->value.data();
    const double* g = p->grad.data();
    double* m = p->adam_m.data();
    double* v = p->adam_v.data();
    for (std::size_t i = 0; i < p->size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      theta[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

}  // namespace faec
