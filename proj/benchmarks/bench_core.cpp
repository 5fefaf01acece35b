#include <benchmark/benchmark.h>

#include <random>

#include "mars/cars.hpp"
#include "mars/sensor.hpp"
#include "mars/synth.hpp"
#include "mars/tensor.hpp"

namespace {

mars::Matrix random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  mars::Matrix m(rows, cols);
  for (double& x : m.data()) x = u(rng);
  return m;
}

mars::Tensor3 random_cube(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  mars::Tensor3 t(n, n, n);
  for (double& x : t.data()) x = u(rng);
  return t;
}

mars::SynthData benchmark_data() {
  mars::SynthConfig cfg;
  cfg.n_viewers = 100;
  cfg.n_channels = 10;
  cfg.n_slots = 200;
  cfg.base_donation_rate = 0.005;
  cfg.seed = 17;
  return mars::generate(cfg);
}

mars::TrainingData benchmark_bundle(const mars::SynthData& data) {
  mars::TrainingData bundle;
  bundle.donations = data.donations;
  bundle.responses = data.responses;
  bundle.events = data.events;
  bundle.graph = data.graph;
  bundle.relations = data.relations;
  return bundle;
}

void BM_tucker_reconstruct(benchmark::State& state) {
  const int alpha = static_cast<int>(state.range(0));
  std::mt19937_64 rng(3);
  const mars::Tensor3 core = random_cube(alpha, rng);
  const mars::Matrix vf = random_matrix(100, alpha, rng);
  const mars::Matrix cf = random_matrix(10, alpha, rng);
  const mars::Matrix tf = random_matrix(200, alpha, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mars::tucker_reconstruct(core, vf, cf, tf));
  }
}
BENCHMARK(BM_tucker_reconstruct)->Arg(8)->Arg(16)->Arg(32);

void BM_total_loss(benchmark::State& state) {
  const mars::SynthData data = benchmark_data();
  const mars::TrainingData bundle = benchmark_bundle(data);
  mars::SensorConfig cfg;
  cfg.alpha = static_cast<int>(state.range(0));
  cfg.seed = 5;
  const mars::SensorModel model = mars::init_sensor_model(bundle, cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mars::total_loss(model, bundle, cfg));
  }
}
BENCHMARK(BM_total_loss)->Arg(8)->Arg(16);

void BM_gradients(benchmark::State& state) {
  const mars::SynthData data = benchmark_data();
  const mars::TrainingData bundle = benchmark_bundle(data);
  mars::SensorConfig cfg;
  cfg.alpha = static_cast<int>(state.range(0));
  cfg.seed = 5;
  const mars::SensorModel model = mars::init_sensor_model(bundle, cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mars::gradients(model, bundle, cfg));
  }
}
BENCHMARK(BM_gradients)->Arg(8)->Arg(16);

void BM_cars_epoch(benchmark::State& state) {
  const mars::SynthData data = benchmark_data();
  const mars::TrainingData bundle = benchmark_bundle(data);
  mars::SensorConfig scfg;
  scfg.alpha = 8;
  scfg.seed = 5;
  const mars::SensorModel model = mars::init_sensor_model(bundle, scfg);
  const auto pairs = mars::build_bpr_pairs(data.donations, data.msps);
  std::mt19937_64 rng(7);
  mars::CarsParams params;
  params.h.resize(2 * 8 + 1);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (double& x : params.h) x = u(rng);
  params.tau_social.assign(model.n_viewers(), 0.5);
  params.tau_relation.assign(model.n_viewers(), 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mars::cars_gradients(params, model, data.msps, pairs));
  }
}
BENCHMARK(BM_cars_epoch);

}  // namespace

BENCHMARK_MAIN();
