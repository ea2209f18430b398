// Serial vs OpenMP timings for the two hot paths: Krum's distance table and one federation round.
// Arg(0) is serial, Arg(1) is parallel.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "fedrec/config.hpp"
#include "fedrec/data.hpp"
#include "fedrec/experiment.hpp"
#include "fedrec/fed.hpp"
#include "fedrec/kernels.hpp"

namespace {

using fedrec::Execution;

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::Parallel : Execution::Serial; }

void BM_PairwiseDistances(benchmark::State& state) {
  const std::size_t clients = 45, width = 200 * 16 * 2;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise;
  std::vector<std::vector<double>> vectors(clients, std::vector<double>(width));
  for (auto& v : vectors)
    for (auto& x : v) x = noise(rng);
  const std::vector<std::span<const double>> views(vectors.begin(), vectors.end());
  for (auto _ : state) benchmark::DoNotOptimize(fedrec::pairwise_squared_distances(views, mode(state)));
  state.SetLabel(state.range(0) ? "openmp" : "serial");
}
BENCHMARK(BM_PairwiseDistances)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_FederationRound(benchmark::State& state) {
  auto cfg = fedrec::load_config(std::string(FEDREC_CONFIG_DIR) + "/desk.ini");
  cfg.fed.execution = mode(state);
  const auto data = fedrec::prepare_data(cfg);
  auto fc = cfg.fed;
  fc.total_clients = data.num_users();
  const fedrec::Shape shape{static_cast<std::size_t>(data.num_items), static_cast<std::size_t>(cfg.dim)};
  fedrec::Federation fed(fc, cfg.optim, cfg.loss, shape, fedrec::make_client_datasets(data));
  for (auto _ : state) benchmark::DoNotOptimize(fed.run_round());
  state.SetLabel(state.range(0) ? "openmp" : "serial");
}
BENCHMARK(BM_FederationRound)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
