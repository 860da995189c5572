// Serial reference kernels against the OpenMP kernels on training-sized shapes.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "mrinet/nn/kernels.hpp"
#include "mrinet/nn/reference.hpp"
#include "mrinet/rng.hpp"

using namespace mrinet;

namespace {

Tensor random(const Shape& shape, std::uint64_t seed) {
  Tensor t(shape);
  Rng rng(seed);
  for (float& v : t.values()) v = static_cast<float>(rng.normal());
  return t;
}

// Args: batch, in channels, out channels, spatial size.
void conv_args(benchmark::internal::Benchmark* b) {
  b->Args({16, 1, 8, 64})->Args({16, 16, 32, 16})->Args({4, 64, 64, 56});
}

template <bool Parallel>
void BM_ConvForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0)), c = static_cast<std::size_t>(state.range(1));
  const auto o = static_cast<std::size_t>(state.range(2)), s = static_cast<std::size_t>(state.range(3));
  const Tensor x = random({n, c, s, s}, 1), w = random({o, c, 3, 3}, 2), bias = random({o}, 3);
  for (auto _ : state) {
    if constexpr (Parallel) benchmark::DoNotOptimize(nn::conv2d_forward(x, w, bias));
    else benchmark::DoNotOptimize(nn::reference::conv2d_forward(x, w, bias));
  }
  state.counters["threads"] = Parallel ? omp_get_max_threads() : 1;
}

template <bool Parallel>
void BM_ConvBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0)), c = static_cast<std::size_t>(state.range(1));
  const auto o = static_cast<std::size_t>(state.range(2)), s = static_cast<std::size_t>(state.range(3));
  const Tensor x = random({n, c, s, s}, 1), w = random({o, c, 3, 3}, 2), dy = random({n, o, s, s}, 3);
  for (auto _ : state) {
    if constexpr (Parallel) benchmark::DoNotOptimize(nn::conv2d_backward(x, w, dy));
    else benchmark::DoNotOptimize(nn::reference::conv2d_backward(x, w, dy));
  }
  state.counters["threads"] = Parallel ? omp_get_max_threads() : 1;
}

template <bool Parallel>
void BM_Dense(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0)), in = static_cast<std::size_t>(state.range(1));
  const auto out = static_cast<std::size_t>(state.range(2));
  const Tensor x = random({n, in}, 1), w = random({out, in}, 2), bias = random({out}, 3);
  const Tensor dy = random({n, out}, 4);
  for (auto _ : state) {
    if constexpr (Parallel) {
      benchmark::DoNotOptimize(nn::dense_forward(x, w, bias));
      benchmark::DoNotOptimize(nn::dense_backward(x, w, dy));
    } else {
      benchmark::DoNotOptimize(nn::reference::dense_forward(x, w, bias));
      benchmark::DoNotOptimize(nn::reference::dense_backward(x, w, dy));
    }
  }
}

}  // namespace

BENCHMARK(BM_ConvForward<false>)->Apply(conv_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvForward<true>)->Apply(conv_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackward<false>)->Apply(conv_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackward<true>)->Apply(conv_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Dense<false>)->Args({16, 512, 256})->Args({16, 32, 32})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Dense<true>)->Args({16, 512, 256})->Args({16, 32, 32})->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
