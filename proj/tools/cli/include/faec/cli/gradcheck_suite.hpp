#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "faec/numerics/grad_check.hpp"

namespace faec::cli {

enum class GradScope { ops, chain, e2e, all };

GradScope parse_grad_scope(std::string_view name);

struct GradCase {
  std::string name;
  DifferentiableFn fn;
  std::vector<double> point;
  std::vector<std::size_t> probes;  // empty: every coordinate
  double threshold = 1e-6;
};

struct GradCaseResult {
  std::string name;
  GradCheckResult check;
  double threshold = 0.0;

  bool pass() const { return check.max_rel_error < threshold; }
};

struct GradSuiteReport {
  std::vector<GradCaseResult> cases;

  bool pass() const;
  std::size_t total_probes() const;
  // Largest error relative to its own threshold.
  const GradCaseResult* worst() const;
};

inline constexpr double kOpThreshold = 1e-6;
inline constexpr double kChainThreshold = 1e-4;

// Isolated ops: dense, activations, softmax, cross-entropy, dense layer,
// feedforward stack, BRNN cell (both merges), and each channel stage.
std::vector<GradCase> op_cases();
// Full channel pass with frozen noise.
std::vector<GradCase> chain_cases();
// encoder -> channel (frozen noise) -> decoder -> cross-entropy on tiny
// FFNN and BRNN transceivers, with respect to every parameter.
std::vector<GradCase> e2e_cases();
std::vector<GradCase> grad_cases(GradScope scope);

GradSuiteReport run_grad_suite(const std::vector<GradCase>& cases);
std::string format_grad_report(const GradSuiteReport& report);

}  // namespace faec::cli
