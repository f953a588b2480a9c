#include <benchmark/benchmark.h>

#include <random>

#include "sbx/calibrate.hpp"
#include "sbx/design.hpp"
#include "sbx/estimate.hpp"
#include "sbx/evaluate.hpp"
#include "sbx/generate.hpp"

namespace {

sbx::PanelDataset bench_panel(int n, int T, std::uint64_t seed) {
  return sbx::generate_panel(sbx::default_generator_params(), n, T, {}, seed);
}

sbx::PodAssignment bench_pods(int n) {
  sbx::PodAssignment pods;
  pods.pod.resize(n);
  pods.cluster.assign(n, 0);
  for (int i = 0; i < n; ++i) pods.pod[i] = i % 2 == 0 ? sbx::Pod::A : sbx::Pod::B;
  return pods;
}

void BM_double_demean(benchmark::State& state) {
  const auto panel = bench_panel(80, 112, 1);
  for (auto _ : state) benchmark::DoNotOptimize(sbx::double_demean(panel.outcomes));
}
BENCHMARK(BM_double_demean);

void BM_twfe_fit_80x112(benchmark::State& state) {
  const auto panel = bench_panel(80, 112, 2);
  const auto schedule = sbx::switchback_assignment(bench_pods(80), 112, 1, 3);
  for (auto _ : state) benchmark::DoNotOptimize(sbx::twfe_fit(panel, schedule));
}
BENCHMARK(BM_twfe_fit_80x112);

void BM_generate_panel_80x366(benchmark::State& state) {
  const auto params = sbx::default_generator_params();
  std::uint64_t seed = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(sbx::generate_panel(params, 80, 366, {}, seed++));
}
BENCHMARK(BM_generate_panel_80x366);

void BM_calibrate_80x366(benchmark::State& state) {
  const auto panel = bench_panel(80, 366, 4);
  for (auto _ : state) benchmark::DoNotOptimize(sbx::calibrate(panel));
}
BENCHMARK(BM_calibrate_80x366);

void BM_kmeans_80x3_k8(benchmark::State& state) {
  const auto panel = bench_panel(80, 120, 5);
  const Eigen::MatrixXd features = sbx::unit_features(panel);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sbx::kmeans(features, 8, seed++));
}
BENCHMARK(BM_kmeans_80x3_k8);

void BM_aa_replication(benchmark::State& state) {
  const auto panel = bench_panel(80, 366, 6);
  const auto pods = bench_pods(80);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const auto schedule = sbx::switchback_assignment(pods, 56, 7, seed++);
    const auto window = panel.window(0, 56);
    benchmark::DoNotOptimize(sbx::twfe_fit(window, schedule));
  }
}
BENCHMARK(BM_aa_replication);

}  // namespace
