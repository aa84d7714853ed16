#include "faec/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "faec/errors.hpp"
#include "faec/numerics/rng.hpp"

namespace faec {

GradCheckResult grad_check(const DifferentiableFn& f, std::span<const double> point,
                           std::span<const std::size_t> probes, double step) {
  std::vector<double> x(point.begin(), point.end());
  std::vector<double> analytic(x.size());
  f(x, analytic);

  std::vector<std::size_t> all;
  if (probes.empty()) {
    all.resize(x.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    probes = all;
  }

  GradCheckResult result;
  const std::span<double> no_grad;
  for (std::size_t i : probes) {
    if (i >= x.size()) throw ConfigError("grad_check: probe index out of range");
    const double saved = x[i];
    x[i] = saved + step;
    const double up = f(x, no_grad);
    x[i] = saved - step;
    const double down = f(x, no_grad);
    x[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), kGradCheckFloor});
    const double err = std::abs(analytic[i] - numeric) / denom;
    if (!std::isfinite(err)) throw NumericError("grad_check: non-finite gradient");
    if (result.probes == 0 || err > result.max_rel_error) {
      result.max_rel_error = err;
      result.worst_index = i;
      result.worst_analytic = analytic[i];
      result.worst_numeric = numeric;
    }
    ++result.probes;
  }
  return result;
}

std::vector<std::size_t> probe_coordinates(std::size_t dimension, std::size_t count,
                                           std::uint64_t seed) {
  std::vector<std::size_t> idx(dimension);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (count >= dimension) return idx;
  RngStream rng(seed);
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform_index(dimension - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace faec
