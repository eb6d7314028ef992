// Micro-benchmarks for the hot paths: crafting loops, the game solver, and
// the processing kernels they lean on.
#include <benchmark/benchmark.h>

#include "aipgame/aip.hpp"
#include "aipgame/classifier.hpp"
#include "aipgame/game.hpp"
#include "aipgame/harness.hpp"
#include "aipgame/processing.hpp"
#include "aipgame/rng.hpp"
#include "aipgame/tensor.hpp"

namespace {

using namespace aipgame;

const Experiment& toy() {
  static const Experiment experiment = prepare_experiment(ExperimentConfig{});
  return experiment;
}

const Tensor& sample_image() { return toy().test_set.images.front(); }

const PayoffMatrix& mid_table() {
  for (const auto& [name, matrix] : reference_tables()) {
    if (name == "googlenet") return matrix;
  }
  throw std::runtime_error("missing reference table");
}

void BM_InputGrad(benchmark::State& state) {
  const Experiment& e = toy();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        input_grad(e.model, sample_image(), LossSpec::kSoftmaxLog, 0));
  }
}
BENCHMARK(BM_InputGrad);

void BM_CraftIterative(benchmark::State& state) {
  const Experiment& e = toy();
  AttackConfig config;
  config.loss = LossSpec::kMargin;
  config.eps = scaled_eps(1000.0, sample_image().size());
  config.gamma = 5e3;
  config.iterations = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(craft_iterative(e.model, sample_image(), 0, config));
  }
}
BENCHMARK(BM_CraftIterative)->Arg(10)->Arg(100);

void BM_CraftDeepFool(benchmark::State& state) {
  const Experiment& e = toy();
  AttackConfig config;
  config.loss = LossSpec::kDeepFoolLinearized;
  config.eps = scaled_eps(1000.0, sample_image().size());
  config.gamma = 1.0;
  config.iterations = 100;
  for (auto _ : state) {
    benchmark::DoNotOptimize(craft_deepfool(e.model, sample_image(), 0, config));
  }
}
BENCHMARK(BM_CraftDeepFool);

void BM_VaccinatedGrad(benchmark::State& state) {
  const Experiment& e = toy();
  VaccinationSpec vaccination;
  vaccination.mode = VaccinationSpec::Mode::kTnbcMix;
  vaccination.strategies = {{ProcessingKind::kTnbc, ProcessingConfig{}}};
  std::uint64_t i = 0;
  for (auto _ : state) {
    SeededRng rng(i++);
    benchmark::DoNotOptimize(vaccinated_grad(e.model, sample_image(), 0,
                                             LossSpec::kSoftmaxLog, vaccination, rng));
  }
}
BENCHMARK(BM_VaccinatedGrad);

void BM_EnsemblePredict(benchmark::State& state) {
  const Experiment& e = toy();
  ProcessingStrategy strategy{ProcessingKind::kTnbc, ProcessingConfig{}};
  std::uint64_t i = 0;
  for (auto _ : state) {
    SeededRng rng(i++);
    benchmark::DoNotOptimize(ensemble_predict(e.model, sample_image(), strategy, rng));
  }
}
BENCHMARK(BM_EnsemblePredict);

void BM_SolveMinimax(benchmark::State& state) {
  const PayoffMatrix& table = mid_table();
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_minimax(table));
  }
}
BENCHMARK(BM_SolveMinimax);

void BM_OracleMinimax(benchmark::State& state) {
  SeededRng rng(5);
  std::vector<double> entries(16);
  for (double& v : entries) v = rng.uniform();
  PayoffMatrix table({"a", "b", "c", "d"}, {"w", "x", "y", "z"}, entries);
  for (auto _ : state) {
    benchmark::DoNotOptimize(oracle_minimax_small(table));
  }
}
BENCHMARK(BM_OracleMinimax);

void BM_Blur(benchmark::State& state) {
  SeededRng rng(6);
  Tensor x({16, 16});
  for (double& v : x.values()) v = 255.0 * rng.uniform();
  for (auto _ : state) {
    benchmark::DoNotOptimize(blur_fixed(x, static_cast<int>(state.range(0))));
  }
}
BENCHMARK(BM_Blur)->Arg(3)->Arg(9);

void BM_ApplyProc(benchmark::State& state) {
  SeededRng rng(7);
  Tensor x({16, 16});
  for (double& v : x.values()) v = 255.0 * rng.uniform();
  for (auto _ : state) {
    benchmark::DoNotOptimize(apply_proc(x));
  }
}
BENCHMARK(BM_ApplyProc);

}  // namespace

BENCHMARK_MAIN();
