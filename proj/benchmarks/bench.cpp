#include <benchmark/benchmark.h>

#include "csi4/data/dataset.hpp"
#include "csi4/models/networks.hpp"
#include "csi4/training/losses.hpp"
#include "csi4/training/trainer.hpp"

using namespace csi4;

namespace {

ad::Tensor gaussian(ad::Shape shape, std::uint64_t seed) {
  Rng rng(seed, "bench");
  ad::Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.normal();
  return t;
}

std::vector<int> cycling_labels(std::size_t m, std::size_t k) {
  std::vector<int> labels(m);
  for (std::size_t i = 0; i < m; ++i) labels[i] = static_cast<int>(i % k);
  return labels;
}

// Desk geometry: 4 classes, 8 antennas x 10 time steps.
models::GeneratorSpec desk_generator() {
  models::GeneratorSpec s;
  s.num_classes = 4;
  s.antennas = 8;
  s.time = 10;
  return s;
}

models::CriticSpec desk_critic() {
  models::CriticSpec s;
  s.num_classes = 4;
  s.in_features = 80;
  return s;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = gaussian({n, n}, 1), b = gaussian({n, n}, 2);
  for (auto _ : state) {
    ad::Graph g;
    benchmark::DoNotOptimize(ad::matmul(g.constant(a), g.constant(b)).value().data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256)->Arg(1024);

void BM_GeneratorForward(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto spec = desk_generator();
  const auto params = models::build_generator(spec, 1);
  const auto z = gaussian({m, spec.latent_dim}, 3);
  const auto labels = cycling_labels(m, spec.num_classes);
  for (auto _ : state) benchmark::DoNotOptimize(models::generate(spec, params, z, labels).data().data());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m));
}
BENCHMARK(BM_GeneratorForward)->Arg(32)->Arg(1024);

void BM_GradientPenaltyBackward(benchmark::State& state) {
  const auto spec = desk_critic();
  const auto params = models::build_critic(spec, 2);
  const auto x = gaussian({32, 80}, 4);
  const auto labels = cycling_labels(32, spec.num_classes);
  for (auto _ : state) {
    ad::Graph g(ad::Order::second);
    const models::BoundParams bound(g, params, true);
    const auto pen = train::gradient_penalty(
        [&](const ad::Var& in) { return models::critic_forward(spec, bound, in, labels, {}); }, g.leaf(x), 10.0f);
    benchmark::DoNotOptimize(bound.backward(pen.value));
  }
}
BENCHMARK(BM_GradientPenaltyBackward);

void BM_CwganIterations(benchmark::State& state) {
  data::SynthCorpusSpec cs;
  const auto corpus = data::normalize(data::synth_corpus(cs));
  train::TrainConfig cfg;
  cfg.epochs = 10;
  cfg.save_every = 1000;  // no snapshots
  for (auto _ : state) {
    benchmark::DoNotOptimize(train::train_cwgan(corpus, desk_generator(), desk_critic(), cfg).generator_updates);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.epochs));
}
BENCHMARK(BM_CwganIterations)->Unit(benchmark::kMillisecond);

void BM_ClassifierLogits(benchmark::State& state) {
  models::ClassifierSpec spec;
  spec.num_classes = 4;
  spec.antennas = 8;
  spec.time = 10;
  const auto params = models::build_classifier(spec, 5);
  const auto x = gaussian({256, 8, 10}, 6);
  for (auto _ : state) benchmark::DoNotOptimize(models::classifier_logits(spec, params, x).data().data());
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_ClassifierLogits);

}  // namespace

BENCHMARK_MAIN();
