#include "faec/numerics/dft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <utility>

#include "faec/errors.hpp"

namespace faec {

namespace {

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t n, int sign) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_pair(n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    // The planner needs scratch arrays; FFTW_ESTIMATE never writes to them.
    auto* scratch = fftw_alloc_complex(n);
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), scratch, scratch, sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
    if (!plan) throw ConfigError("dft: FFTW could not plan size " + std::to_string(n));
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

void transform(std::span<Complex> x, int sign) {
  const std::size_t n = x.size();
  if (n == 0) throw ConfigError("dft: empty input");
  auto* data = reinterpret_cast<fftw_complex*>(x.data());
  fftw_execute_dft(plan_cache().get(n, sign), data, data);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& v : x) v *= scale;
}

}  // namespace

void dft_inplace(std::span<Complex> x) { transform(x, FFTW_FORWARD); }
void idft_inplace(std::span<Complex> x) { transform(x, FFTW_BACKWARD); }

ComplexBuffer dft(std::span<const Complex> x) {
  ComplexBuffer out(x.begin(), x.end());
  dft_inplace(out);
  return out;
}

ComplexBuffer idft(std::span<const Complex> x) {
  ComplexBuffer out(x.begin(), x.end());
  idft_inplace(out);
  return out;
}

double bin_frequency(std::size_t k, std::size_t n, double sample_rate) {
  const double step = sample_rate / static_cast<double>(n);
  return k <= n / 2 ? static_cast<double>(k) * step
                    : (static_cast<double>(k) - static_cast<double>(n)) * step;
}

}  // namespace faec
