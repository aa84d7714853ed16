#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace faec {

// Scalar map with an analytic gradient. Must write d f / d x into `grad`
// (same length as x) when grad is non-empty, and be deterministic.
using DifferentiableFn = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t probes = 0;
};

inline constexpr double kGradCheckStep = 1e-5;
// Denominator floor of the relative error; below it errors are absolute.
inline constexpr double kGradCheckFloor = 1e-6;

// Central-difference check of the analytic gradient at `point` for each probed
// coordinate: |a - n| / max(|a|, |n|, kGradCheckFloor). An empty probe list
// checks every coordinate.
GradCheckResult grad_check(const DifferentiableFn& f, std::span<const double> point,
                           std::span<const std::size_t> probes = {},
                           double step = kGradCheckStep);

// `count` distinct coordinates out of `dimension`, drawn with a fixed seed
// (all of them if count >= dimension).
std::vector<std::size_t> probe_coordinates(std::size_t dimension, std::size_t count,
                                           std::uint64_t seed);

}  // namespace faec
