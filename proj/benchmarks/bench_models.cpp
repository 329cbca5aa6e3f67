// Microbenchmarks for the forward/backward kernels and the brute-force
// cross-term enumeration (whose cost grows as sum_r C(m,r)*k).

#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "afn/afn_model.hpp"
#include "afn/baselines.hpp"
#include "afn/logtransform.hpp"
#include "afn/synth.hpp"
#include "afn/training.hpp"

namespace {

using namespace afn;

Dataset synthetic_dataset(int count, int fields, std::uint64_t seed) {
  Dataset ds;
  Rng rng(seed);
  for (int i = 0; i < fields; ++i) {
    FieldSchema f{i, "f" + std::to_string(i), FieldKind::kCategorical, 11, {}};
    for (int v = 0; v < 10; ++v) f.vocab["v" + std::to_string(v)] = v + 1;
    ds.schema.push_back(std::move(f));
  }
  for (int n = 0; n < count; ++n) {
    Instance inst;
    inst.label = rng.bernoulli(0.5) ? 1 : 0;
    for (int i = 0; i < fields; ++i) {
      inst.values.push_back(1.0 + static_cast<double>(rng.uniform_int(10)));
    }
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

ModelConfig default_afn_config() {
  ModelConfig mc;
  mc.embed_dim = 8;
  mc.log_neurons = 32;
  mc.hidden = {32, 32};
  return mc;
}

void BM_LtlForward(benchmark::State& state) {
  Rng rng(1);
  const std::size_t m = 8;
  const std::size_t k = 10;
  Mat e(m, k);
  for (double& v : e.a) v = rng.uniform(0.1, 2.0);
  Mat w(m, static_cast<std::size_t>(state.range(0)));
  for (double& v : w.a) v = rng.uniform(-1.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ltl_forward(e, w));
  }
}
BENCHMARK(BM_LtlForward)->Arg(16)->Arg(64)->Arg(256);

void BM_AfnInferBatch(benchmark::State& state) {
  Dataset ds = synthetic_dataset(static_cast<int>(state.range(0)), 8, 2);
  AfnModel model(ds.schema, default_afn_config(), 1);
  std::vector<int> rows(ds.size());
  std::iota(rows.begin(), rows.end(), 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.forward_batch(ds, rows, Mode::kInfer));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AfnInferBatch)->Arg(256)->Arg(1024);

void BM_AfnTrainStep(benchmark::State& state) {
  Dataset ds = synthetic_dataset(256, 8, 3);
  AfnModel model(ds.schema, default_afn_config(), 1);
  std::vector<int> rows(ds.size());
  std::iota(rows.begin(), rows.end(), 0);
  AdamState adam(model.params());
  TrainConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.forward_backward(ds, rows));
    adam_step(model.params(), adam, cfg);
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_AfnTrainStep);

void BM_HofmCrossTerm(benchmark::State& state) {
  Rng rng(4);
  Mat e(10, 8);
  for (double& v : e.a) v = rng.uniform(-1.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cross_term(e, 2, static_cast<int>(state.range(0))));
  }
}
BENCHMARK(BM_HofmCrossTerm)->Arg(2)->Arg(3)->Arg(4)->Arg(5);

void BM_Auc(benchmark::State& state) {
  Rng rng(5);
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::vector<int> labels(n);
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = rng.bernoulli(0.5) ? 1 : 0;
    scores[i] = rng.uniform(-4.0, 4.0);
  }
  labels[0] = 1;
  labels[1] = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(auc(labels, scores));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Auc)->Arg(10000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
