// Serial reference vs OpenMP patched covariance, and one solver pass.
#include "fragcov/complete.hpp"
#include "fragcov/kernels.hpp"
#include "fragcov/patch.hpp"
#include "fragcov/rng.hpp"

#include <benchmark/benchmark.h>

using namespace fragcov;

namespace {

FragmentSample common_sample(int n, int K)
{
    auto rng = make_stream(3, 0, Stage::Grid);
    const Grid grid = Grid::perturbed(K, rng);
    const SymMatrix truth = evaluate_on_grid(parse_kernel("scenarioA:3"), grid);
    return fragment(sample_gp(truth, n, 4), grid, FragmentLaw::fixed(0.5), 5);
}

FragmentSample type2_sample(int n)
{
    IrregularOptions opts;
    opts.grid_type = GridType::Type2;
    return fragment_irregular(parse_kernel("scenarioA:2"), n, FragmentLaw::uniform(0.5, 0.7), opts, 6);
}

void BM_PatchRegularReference(benchmark::State& state)
{
    const auto s = common_sample(static_cast<int>(state.range(0)), 50);
    for (auto _ : state) benchmark::DoNotOptimize(reference::patched_regular(s, 50));
}

void BM_PatchRegularParallel(benchmark::State& state)
{
    const auto s = common_sample(static_cast<int>(state.range(0)), 50);
    for (auto _ : state) benchmark::DoNotOptimize(patched_regular(s, 50));
}

void BM_PatchBinnedReference(benchmark::State& state)
{
    const auto s = type2_sample(static_cast<int>(state.range(0)));
    const int K = type2_resolution(s);
    for (auto _ : state) benchmark::DoNotOptimize(reference::patched_binned(s, K));
}

void BM_PatchBinnedParallel(benchmark::State& state)
{
    const auto s = type2_sample(static_cast<int>(state.range(0)));
    const int K = type2_resolution(s);
    for (auto _ : state) benchmark::DoNotOptimize(patched_binned(s, K));
}

void BM_SolveRank3(benchmark::State& state)
{
    const PatchedCovariance p = patched_regular(common_sample(200, 50), 50);
    SolveConfig cfg;
    cfg.rank_policy = RankPolicy::fixed(3);
    for (auto _ : state) benchmark::DoNotOptimize(estimate_covariance(p, cfg, 0.4));
}

} // namespace

BENCHMARK(BM_PatchRegularReference)->Arg(200)->Arg(800);
BENCHMARK(BM_PatchRegularParallel)->Arg(200)->Arg(800);
BENCHMARK(BM_PatchBinnedReference)->Arg(200)->Arg(400);
BENCHMARK(BM_PatchBinnedParallel)->Arg(200)->Arg(400);
BENCHMARK(BM_SolveRank3);

BENCHMARK_MAIN();
