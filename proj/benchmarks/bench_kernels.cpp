// Microbenchmarks for the hot kernels and the scale-pruned forward pass.

#include <random>

#include <benchmark/benchmark.h>

#include "lmsc/model.hpp"
#include "lmsc/ops.hpp"

namespace {

lmsc::Tensor random_tensor(std::vector<std::int64_t> shape, std::uint64_t seed) {
    lmsc::Tensor t = lmsc::Tensor::zeros(std::move(shape));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-1, 1);
    for (auto& v : t.data()) v = static_cast<lmsc::scalar>(d(rng));
    return t;
}

void BM_Conv2d3x3(benchmark::State& state) {
    const std::int64_t c = state.range(0), hw = state.range(1);
    auto x = random_tensor({1, c, hw, hw}, 1);
    auto w = random_tensor({c, c, 3, 3}, 2);
    auto b = random_tensor({c}, 3);
    lmsc::NoGradGuard ng;
    for (auto _ : state) benchmark::DoNotOptimize(lmsc::conv2d(x, w, b, 1, 1, 1));
}
BENCHMARK(BM_Conv2d3x3)->Args({32, 64})->Args({48, 32});

void BM_Conv3dDilated(benchmark::State& state) {
    const int dil = static_cast<int>(state.range(0));
    auto x = random_tensor({1, 8, 8, 32, 32}, 1);
    auto w = random_tensor({8, 8, 3, 3, 3}, 2);
    auto b = random_tensor({8}, 3);
    lmsc::NoGradGuard ng;
    for (auto _ : state) benchmark::DoNotOptimize(lmsc::conv3d(x, w, b, 1, dil, dil));
}
BENCHMARK(BM_Conv3dDilated)->Arg(1)->Arg(2)->Arg(3);

void BM_ForwardPruned(benchmark::State& state) {
    lmsc::ModelConfig cfg;
    cfg.grid = {64, 64, 8, 0.2};
    cfg.channels = {8, 24, 40, 56};
    auto model = lmsc::build(cfg);
    auto x = random_tensor({1, 8, 64, 64}, 4);
    const int level = static_cast<int>(state.range(0));
    lmsc::NoGradGuard ng;
    for (auto _ : state) benchmark::DoNotOptimize(lmsc::forward(model, x, {level}));
}
BENCHMARK(BM_ForwardPruned)->DenseRange(0, 3);

} // namespace

BENCHMARK_MAIN();
