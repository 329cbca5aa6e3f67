#include <doctest.h>

#include <cmath>
#include <numeric>

#include "afn/checkpoint.hpp"
#include "afn/synth.hpp"
#include "afn/training.hpp"

#include <filesystem>
#include <fstream>

using namespace afn;
namespace fs = std::filesystem;

namespace {

// O(n^2) pairwise probability, the oracle for the rank-sum implementation.
double auc_pairwise(const std::vector<int>& labels, const std::vector<double>& scores) {
  double num = 0.0;
  long pairs = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) {
        num += 1.0;
      } else if (scores[i] == scores[j]) {
        num += 0.5;
      }
    }
  }
  return num / static_cast<double>(pairs);
}

Dataset synth_dataset(int count, std::uint64_t seed) {
  const fs::path p = fs::temp_directory_path() / ("afn_train_synth_" + std::to_string(seed) + ".tsv");
  SynthConfig cfg;
  cfg.count = count;
  cfg.seed = seed;
  gen_synth_tsv(p.string(), cfg);
  const Schema s = fit_schema(p.string());
  return load_dataset(p.string(), s);
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("logloss of a zero logit is ln 2") {
  CHECK(std::abs(stable_logloss(1, 0.0) - std::log(2.0)) <= 1e-12);
  CHECK(stable_logloss(1, 50.0) <= 1e-20);  // saturated correct
  const std::vector<int> y{1, 0};
  const std::vector<double> z{0.0, 0.0};
  CHECK(logloss(y, z) == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK_THROWS_AS(logloss(std::vector<int>{}, std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("logloss has label-flip symmetry and is nonnegative") {
  Rng rng(4);
  for (int t = 0; t < 1000; ++t) {
    const double z = rng.uniform(-40.0, 40.0);
    CHECK(stable_logloss(1, z) == stable_logloss(0, -z));
    CHECK(stable_logloss(1, z) >= 0.0);
  }
}

TEST_CASE("adam takes a near-lr step on a fresh state") {
  ParamStore store;
  Tensor& t = store.add("w", {3});
  t.value = {1.0, 1.0, 1.0};
  std::fill(t.grad.begin(), t.grad.end(), 2.0);
  AdamState state(store);
  TrainConfig cfg;
  adam_step(store, state, cfg);
  // bias-corrected m=2, v=4: step = lr * 2 / (2 + eps)
  const double expect = 1.0 - 0.001 * 2.0 / (2.0 + 1e-8);
  for (double v : t.value) CHECK(v == doctest::Approx(expect).epsilon(1e-12));
  CHECK(state.step_count() == 1);
}

TEST_CASE("adam with zero gradients and zero moments is the identity") {
  ParamStore store;
  Tensor& t = store.add("w", {2});
  t.value = {0.5, -0.5};
  AdamState state(store);
  TrainConfig cfg;
  adam_step(store, state, cfg);
  CHECK(t.value[0] == 0.5);
  CHECK(t.value[1] == -0.5);
}

TEST_CASE("adam moves against the gradient direction") {
  ParamStore store;
  Tensor& t = store.add("w", {2});
  t.value = {0.0, 0.0};
  t.grad = {3.0, -0.2};
  AdamState state(store);
  TrainConfig cfg;
  adam_step(store, state, cfg);
  CHECK(t.value[0] < 0.0);
  CHECK(t.value[1] > 0.0);
}

TEST_CASE("auc matches hand-computed rankings") {
  CHECK(auc(std::vector<int>{1, 1, 0}, std::vector<double>{0.9, 0.8, 0.1}) == doctest::Approx(1.0));
  CHECK(auc(std::vector<int>{1, 0, 1}, std::vector<double>{0.9, 0.8, 0.1}) == doctest::Approx(0.5));
  CHECK(auc(std::vector<int>{1, 0, 1, 0}, std::vector<double>{0.4, 0.4, 0.4, 0.4}) ==
        doctest::Approx(0.5));
  CHECK_THROWS_AS(auc(std::vector<int>{1, 1}, std::vector<double>{0.1, 0.2}),
                  std::invalid_argument);
}

TEST_CASE("rank-sum auc equals the pairwise oracle") {
  Rng rng(9);
  for (int t = 0; t < 30; ++t) {
    const int n = 2 + static_cast<int>(rng.uniform_int(199));
    std::vector<int> labels(n);
    std::vector<double> scores(n);
    for (int i = 0; i < n; ++i) {
      labels[i] = rng.bernoulli(0.4) ? 1 : 0;
      // coarse grid to force plenty of ties
      scores[i] = std::floor(rng.uniform(0.0, 8.0)) / 8.0;
    }
    labels[0] = 1;
    labels[1] = 0;
    CHECK(std::abs(auc(labels, scores) - auc_pairwise(labels, scores)) <= 1e-12);
  }
}

TEST_CASE("auc is invariant under strictly increasing transforms") {
  Rng rng(10);
  std::vector<int> labels(64);
  std::vector<double> scores(64);
  for (int i = 0; i < 64; ++i) {
    labels[i] = i % 2;
    scores[i] = rng.uniform(-3.0, 3.0);
  }
  const double base = auc(labels, scores);
  std::vector<double> affine(64);
  std::vector<double> expo(64);
  for (int i = 0; i < 64; ++i) {
    affine[i] = 2.0 * scores[i] + 1.0;
    expo[i] = std::exp(scores[i]);
  }
  CHECK(auc(labels, affine) == base);
  CHECK(auc(labels, expo) == base);
}

TEST_CASE("saturated correct predictions give zero loss and perfect auc") {
  const std::vector<int> labels{1, 0};
  const std::vector<double> logits{50.0, -50.0};
  CHECK(logloss(labels, logits) <= 1e-20);
  CHECK(auc(labels, logits) == 1.0);
}

TEST_CASE("train stops after the first non-improving epoch at patience zero") {
  const Dataset ds = synth_dataset(600, 51);
  const auto parts = split(ds, {0.7, 0.3, 0.0}, 3);
  ModelConfig mc;
  mc.embed_dim = 2;
  auto model = make_model(ModelKind::kLr, ds.schema, mc, 1);
  TrainConfig tc;
  tc.batch_size = 64;
  tc.max_epochs = 60;
  tc.patience = 0;
  tc.seed = 5;
  const TrainResult res = train(*model, parts[0], parts[1], tc);
  REQUIRE(!res.log.empty());
  // every epoch before the last strictly improved val auc
  double best = -1.0;
  for (std::size_t i = 0; i + 1 < res.log.size(); ++i) {
    CHECK(res.log[i].val_auc > best);
    best = std::max(best, res.log[i].val_auc);
  }
  if (res.log.size() < static_cast<std::size_t>(tc.max_epochs)) {
    CHECK(res.log.back().val_auc <= best);                      // the stopping epoch
    CHECK(res.best_epoch == static_cast<int>(res.log.size()) - 1);  // last improving epoch
  }
}

TEST_CASE("train is deterministic given the seed") {
  const Dataset ds = synth_dataset(800, 52);
  const auto parts = split(ds, {0.8, 0.2, 0.0}, 3);
  ModelConfig mc;
  mc.embed_dim = 3;
  mc.log_neurons = 4;
  mc.hidden = {6};
  TrainConfig tc;
  tc.batch_size = 128;
  tc.max_epochs = 4;
  tc.patience = 3;
  tc.seed = 9;

  auto m1 = make_model(ModelKind::kAfn, ds.schema, mc, 9);
  auto m2 = make_model(ModelKind::kAfn, ds.schema, mc, 9);
  const TrainResult r1 = train(*m1, parts[0], parts[1], tc);
  const TrainResult r2 = train(*m2, parts[0], parts[1], tc);
  REQUIRE(r1.log.size() == r2.log.size());
  for (std::size_t i = 0; i < r1.log.size(); ++i) {
    CHECK(r1.log[i].train_logloss == r2.log[i].train_logloss);
    CHECK(r1.log[i].val_auc == r2.log[i].val_auc);
    CHECK(r1.log[i].val_logloss == r2.log[i].val_logloss);
  }
  const auto s1 = m1->params().snapshot_values();
  const auto s2 = m2->params().snapshot_values();
  CHECK(s1 == s2);
}

TEST_CASE("train requires both classes in the validation set") {
  const Dataset ds = synth_dataset(100, 53);
  Dataset oneclass = ds;
  for (auto& inst : oneclass.instances) inst.label = 1;
  ModelConfig mc;
  auto model = make_model(ModelKind::kLr, ds.schema, mc, 1);
  TrainConfig tc;
  CHECK_THROWS_AS(train(*model, ds, oneclass, tc), std::invalid_argument);
}

TEST_CASE("evaluate_model reproduces the best logged validation metrics") {
  const Dataset ds = synth_dataset(1200, 54);
  const auto parts = split(ds, {0.75, 0.25, 0.0}, 11);
  ModelConfig mc;
  mc.embed_dim = 2;
  auto model = make_model(ModelKind::kLr, ds.schema, mc, 2);
  TrainConfig tc;
  tc.batch_size = 128;
  tc.max_epochs = 5;
  const TrainResult res = train(*model, parts[0], parts[1], tc);
  const Metrics m = evaluate_model(*model, parts[1]);
  CHECK(std::abs(m.auc - res.best_val_auc) <= 1e-12);
  CHECK(std::abs(m.logloss - res.best_val_logloss) <= 1e-12);
}

TEST_CASE("a constant-logit model scores auc one half") {
  const Dataset ds = synth_dataset(200, 55);
  ModelConfig mc;
  auto model = make_model(ModelKind::kLr, ds.schema, mc, 1);  // zero weights: constant 0 logit
  const Metrics m = evaluate_model(*model, ds);
  CHECK(m.auc == doctest::Approx(0.5));
}

TEST_CASE("grad_check passes on the tiny fixtures at the documented tolerances") {
  {
    GradCheckFixture fx = make_gradcheck_fixture(ModelKind::kLr, false, 1);
    CHECK(grad_check(*fx.model, fx.data, fx.rows, 1e-5).max_rel_error <= 1e-7);
  }
  {
    GradCheckFixture fx = make_gradcheck_fixture(ModelKind::kAfn, true, 1);
    CHECK(grad_check(*fx.model, fx.data, fx.rows, 1e-5).max_rel_error <= 1e-4);
  }
}

TEST_CASE("a negated gradient tensor is flagged with relative error near two") {
  GradCheckFixture fx = make_gradcheck_fixture(ModelKind::kLr, false, 2);
  fx.model->forward_backward(fx.data, fx.rows);
  std::vector<double> corrupted = fx.model->params().get("lr.b").grad;
  for (double& g : corrupted) g = -g;
  const auto fd = fd_gradients(*fx.model, fx.data, fx.rows, 1e-5);
  const double err = max_relative_error(corrupted, fd.at("lr.b"));
  CHECK(err == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("checkpoints round trip through json byte-exactly") {
  const Dataset ds = synth_dataset(400, 56);
  ModelConfig mc;
  mc.embed_dim = 3;
  mc.log_neurons = 4;
  mc.hidden = {5, 3};
  auto model = make_model(ModelKind::kAfn, ds.schema, mc, 21);
  const fs::path p1 = fs::temp_directory_path() / "afn_test_ckpt1.json";
  const fs::path p2 = fs::temp_directory_path() / "afn_test_ckpt2.json";
  save_checkpoint(*model, p1.string(), {100, 2});

  LoadedCheckpoint lc = load_checkpoint(p1.string());
  CHECK(lc.meta.step == 100);
  CHECK(lc.meta.epoch == 2);
  CHECK(lc.model->kind() == ModelKind::kAfn);
  CHECK(schema_equal(lc.model->schema(), ds.schema));
  save_checkpoint(*lc.model, p2.string(), {100, 2});

  std::ifstream f1(p1, std::ios::binary);
  std::ifstream f2(p2, std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);

  // loaded model predicts identically
  const std::vector<int> rows{0, 1, 2};
  CHECK(model->forward_batch(ds, rows, Mode::kInfer) ==
        lc.model->forward_batch(ds, rows, Mode::kInfer));
}

}  // TEST_SUITE
