#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "selgap/calibration.hpp"
#include "selgap/curves.hpp"
#include "selgap/network.hpp"
#include "selgap/synthdata.hpp"

using namespace selgap;

namespace {

std::vector<ScoredSample> random_scored(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ScoredSample> out(n);
  for (auto& s : out) {
    s.score = u(rng);
    s.correct = u(rng) < s.score;
  }
  return out;
}

void BM_EmpiricalCurve(benchmark::State& state) {
  const auto data = random_scored(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(empirical_curve(data));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_EmpiricalCurve)->RangeMultiplier(10)->Range(1000, 1000000)->Complexity();

void BM_Aurc(benchmark::State& state) {
  const auto curve = empirical_curve(random_scored(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(aurc(curve));
}
BENCHMARK(BM_Aurc)->Arg(10000)->Arg(1000000);

void BM_Isotonic(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto data = random_scored(n);
  std::vector<double> s(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = data[i].score;
    y[i] = data[i].correct ? 1.0 : 0.0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(isotonic_fit_values(s, y));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Isotonic)->RangeMultiplier(10)->Range(1000, 100000)->Complexity();

void BM_Mmd(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = sample_two_moons(TwoMoonsTask{}, n, 1);
  const auto b = sample_two_moons(TwoMoonsTask{}, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(mmd_rbf(a, b, 0.5));
}
BENCHMARK(BM_Mmd)->Arg(500)->Arg(2000);

void BM_GradientBatch(benchmark::State& state) {
  const Network net({2, 32, 32, 2}, OutputHead::softmax_cross_entropy);
  const auto w = net.initialize(3);
  const auto data = sample_two_moons(TwoMoonsTask{}, 1024, 4);
  std::vector<double> x;
  std::vector<int> y;
  for (std::size_t i = 0; i < data.size(); ++i) {
    x.push_back(data.x(i)[0]);
    x.push_back(data.x(i)[1]);
    y.push_back(data.labels[i]);
  }
  const SupervisedView view{2, x, y, {}};
  std::vector<std::size_t> batch(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = i;
  std::vector<double> g(w.size());
  for (auto _ : state) benchmark::DoNotOptimize(net.loss_and_gradient(w, view, batch, g));
}
BENCHMARK(BM_GradientBatch)->Arg(64)->Arg(1024);

}  // namespace
BENCHMARK_MAIN();
