#include <benchmark/benchmark.h>

#include <random>

#include "celldict/dictlearn.hpp"
#include "celldict/imgops.hpp"
#include "celldict/pdhg.hpp"
#include "celldict/preprocess.hpp"

using namespace celldict;

namespace {

Image noise_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(h, w);
  for (auto& v : img.values()) v = u(rng);
  return img;
}

void BM_Gradient(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Image img = noise_image(n, n, 1);
  GradientField g(n, n);
  for (auto _ : state) {
    gradient_into(img, g);
    benchmark::DoNotOptimize(g);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}
BENCHMARK(BM_Gradient)->Arg(8)->Arg(96)->Arg(128);

void BM_PdhgSolve(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Image x = noise_image(n, n, 2);
  const PdhgParams p = PdhgParams().with_lambda(0.05).with_max_iters(200).with_tolerance(1e-300);
  for (auto _ : state) benchmark::DoNotOptimize(solve(x, p));
}
BENCHMARK(BM_PdhgSolve)->Arg(8)->Arg(32)->Arg(96)->Unit(benchmark::kMillisecond);

void BM_Procrustes(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const auto k = static_cast<Eigen::Index>(state.range(1));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Eigen::MatrixXd data(200, n);
  Eigen::MatrixXd codes(200, k);
  for (Eigen::Index i = 0; i < data.size(); ++i) data.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < codes.size(); ++i) codes.data()[i] = g(rng);
  for (auto _ : state) benchmark::DoNotOptimize(procrustes_update(data, codes));
}
BENCHMARK(BM_Procrustes)->Args({64, 4})->Args({256, 64})->Args({1024, 128})->Unit(benchmark::kMillisecond);

void BM_FocusSelect(benchmark::State& state) {
  const Image frame = noise_image(128, 128, 4);
  for (auto _ : state) benchmark::DoNotOptimize(focus_select(frame));
}
BENCHMARK(BM_FocusSelect)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
