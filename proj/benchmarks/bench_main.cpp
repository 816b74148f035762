#include <benchmark/benchmark.h>

#include <random>

#include "fluxwarn/correlation.hpp"
#include "fluxwarn/forecast.hpp"
#include "fluxwarn/lstm.hpp"
#include "fluxwarn/synthetic_city.hpp"

namespace {

using namespace fluxwarn;

Eigen::MatrixXd noise(long rows, long cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  Eigen::MatrixXd m(rows, cols);
  for (long c = 0; c < cols; ++c)
    for (long r = 0; r < rows; ++r) m(r, c) = u(rng);
  return m;
}

ForecastModel model_for(long segments, long hidden) {
  ForecastModel m;
  m.params = LstmParams::initialize(segments, hidden, 3, 1);
  m.norm.mean = Eigen::VectorXd::Constant(segments, 50.0);
  m.norm.std = Eigen::VectorXd::Constant(segments, 25.0);
  return m;
}

// Single 30-minute forecast; args: segments, hidden units.
void BM_Predict(benchmark::State& state) {
  const auto model = model_for(state.range(0), state.range(1));
  const auto recent = noise(6, state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(predict(model, recent));
}
BENCHMARK(BM_Predict)->Args({24, 64})->Args({1472, 64})->Unit(benchmark::kMicrosecond);

// One forward + backward pass over a mini-batch.
void BM_TrainStep(benchmark::State& state) {
  const long S = state.range(0), H = 64, B = 32, L = 6;
  const auto params = LstmParams::initialize(S, H, 3, 3);
  std::vector<Eigen::MatrixXd> steps;
  for (long t = 0; t < L; ++t) steps.push_back(noise(S, B, 10 + t) / 100.0);
  const Eigen::MatrixXd targets = noise(3, B, 4) / 100.0;
  for (auto _ : state) {
    const auto tape = forward_batch(steps, params);
    benchmark::DoNotOptimize(backward_batch(tape, targets, params));
  }
}
BENCHMARK(BM_TrainStep)->Arg(24)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_LagScan(benchmark::State& state) {
  CitySpec spec;
  spec.n_segments = 1;
  const auto traffic = rebin_to_hourly(generate_traffic(spec), "S001");
  const auto pollution = generate_pollution(traffic, 20.0, 0.5, 5.0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(lag_scan(traffic, pollution, 24));
}
BENCHMARK(BM_LagScan)->Unit(benchmark::kMicrosecond);

void BM_GenerateCity(benchmark::State& state) {
  CitySpec spec;
  for (auto _ : state) benchmark::DoNotOptimize(generate_traffic(spec));
}
BENCHMARK(BM_GenerateCity)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
