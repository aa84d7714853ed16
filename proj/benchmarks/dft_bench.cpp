#include <benchmark/benchmark.h>

#include "faec/numerics/dft.hpp"
#include "faec/numerics/rng.hpp"

namespace {

void BM_Dft(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  faec::RngStream rng(1);
  faec::ComplexBuffer x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = {rng.normal(), rng.normal()};
  for (auto _ : state) {
    faec::dft_inplace(x);
    benchmark::DoNotOptimize(x.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
// 336 = (20 + 2*4) blocks of 12 samples, a padded training sequence.
BENCHMARK(BM_Dft)->Arg(216)->Arg(336)->Arg(1296)->Arg(4096);

}  // namespace

BENCHMARK_MAIN();
