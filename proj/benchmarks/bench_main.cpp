#include <benchmark/benchmark.h>

#include "flrpoi/kpsbench.hpp"
#include "flrpoi/pensolve.hpp"
#include "flrpoi/poisearch.hpp"
#include "flrpoi/selector.hpp"
#include "flrpoi/simlab.hpp"
#include "flrpoi/splinepen.hpp"

using namespace flrpoi;

namespace {

FunctionalDataset easy_dataset(std::size_t n, std::size_t p) {
  auto spec = DgpSpec::easy();
  spec.n = n;
  spec.p = p;
  const Eigen::MatrixXd x = gen_brownian(n, p, 1);
  return FunctionalDataset(x, gen_response(x, spec, 2));
}

void BM_BuildPenalty(benchmark::State& state) {
  const Grid grid(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build_penalty(grid));
}
BENCHMARK(BM_BuildPenalty)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_SearchPois(benchmark::State& state) {
  const auto ds = easy_dataset(static_cast<std::size_t>(state.range(0)), 300);
  const auto st = standardize(center(ds));
  const DeltaSpec spec(0.02, 300);
  for (auto _ : state) benchmark::DoNotOptimize(search_potential_pois(st.xst, st.yst, spec));
}
BENCHMARK(BM_SearchPois)->Arg(250)->Arg(1000)->Unit(benchmark::kMicrosecond);

void BM_GcvFit(benchmark::State& state) {
  const auto ds = easy_dataset(static_cast<std::size_t>(state.range(0)), 300);
  const auto c = center(ds);
  const auto pen = penalty_cache(300);
  const SmootherBasis basis(c.xc, c.yc, pen->spectrum);
  const SpectralSmoother smoother(basis, {90, 179});
  for (auto _ : state) benchmark::DoNotOptimize(optimize_gcv(smoother, RhoGrid{}));
}
BENCHMARK(BM_GcvFit)->Arg(250)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_RunVariant(benchmark::State& state) {
  const auto ds = easy_dataset(250, 300);
  SelectorConfig cfg;
  cfg.variant = static_cast<Variant>(state.range(0));
  (void)penalty_cache(300);
  for (auto _ : state) benchmark::DoNotOptimize(run_variant(ds, cfg));
}
BENCHMARK(BM_RunVariant)
    ->Arg(static_cast<int>(Variant::PesEs))
    ->Arg(static_cast<int>(Variant::Cks))
    ->Arg(static_cast<int>(Variant::Kps))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
