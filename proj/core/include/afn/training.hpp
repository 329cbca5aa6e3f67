#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "afn/model.hpp"

namespace afn {

struct TrainConfig {
  double learning_rate = 0.001;
  int batch_size = 4096;
  int max_epochs = 20;
  int patience = 3;  // epochs without val-AUC improvement tolerated
  std::uint64_t seed = 1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int snapshot_every = 0;  // epochs; 0 disables snapshots
};

double sigmoid(double z);

// Numerically stable single-term log loss on the logit scale:
// max(z,0) - z*y + log1p(exp(-|z|)).
double stable_logloss(int label, double logit);

// Mean log loss over a batch; throws on an empty batch.
double logloss(std::span<const int> labels, std::span<const double> logits);

// Probability that a uniformly random positive outranks a uniformly random
// negative, ties counting 1/2 (rank-sum form). Throws on single-class input.
double auc(std::span<const int> labels, std::span<const double> scores);

struct Metrics {
  double auc = 0.0;
  double logloss = 0.0;
};

// Infer-mode forward over the whole dataset. Honors AFN_NUM_THREADS for
// sharding the forward passes; the reduction order is fixed, so results are
// independent of the thread count.
Metrics evaluate_model(Model& model, const Dataset& ds);
std::vector<double> predict_logits(Model& model, const Dataset& ds);

// Per-tensor first/second Adam moments, allocated against the store's
// trainable tensors. t counts completed steps.
class AdamState {
 public:
  explicit AdamState(ParamStore& store);
  long step_count() const { return t_; }

 private:
  friend void adam_step(ParamStore& store, AdamState& state, const TrainConfig& cfg);
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long t_ = 0;
};

// Standard bias-corrected Adam update from each tensor's accumulated grads.
void adam_step(ParamStore& store, AdamState& state, const TrainConfig& cfg);

struct EpochLog {
  int epoch = 0;
  double train_logloss = 0.0;
  double val_auc = 0.0;
  double val_logloss = 0.0;
};

// CSV with header `epoch,train_logloss,val_auc,val_logloss`.
void write_metrics_csv(const std::string& path, std::span<const EpochLog> log);

using SnapshotSink = std::function<void(const Model& model, long step, int epoch)>;

struct TrainResult {
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val_auc = 0.0;
  double best_val_logloss = 0.0;
  long total_steps = 0;
};

// Mini-batch Adam on the mean log loss with early stopping on validation
// AUC. On return the model holds the parameters of the best epoch. Fully
// deterministic given (datasets, cfg).
TrainResult train(Model& model, const Dataset& train_ds, const Dataset& val_ds,
                  const TrainConfig& cfg, const SnapshotSink& snapshot_sink = {});

// ---- gradient checking harness ----

// Train-mode loss of the batch as a pure function of the parameters.
double model_batch_loss(Model& model, const Dataset& ds, std::span<const int> rows);

// Central-difference gradient per trainable coordinate.
std::map<std::string, std::vector<double>> fd_gradients(Model& model, const Dataset& ds,
                                                        std::span<const int> rows, double h);

// |a-b| / max(1e-6, |a|, |b|), maximized over coordinates.
double max_relative_error(std::span<const double> a, std::span<const double> b);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::vector<std::pair<std::string, double>> per_tensor;
};

GradCheckResult grad_check(Model& model, const Dataset& ds, std::span<const int> rows,
                           double h = 1e-5);

// Tiny deterministic fixture (m=3 fields: two categorical, one numerical;
// k=2, N=2, one hidden layer of 4, batch of 8) with embeddings re-drawn at
// magnitudes safely away from the clamp floor so central differences stay in
// the smooth region.
struct GradCheckFixture {
  Dataset data;
  std::unique_ptr<Model> model;
  std::vector<int> rows;
};

GradCheckFixture make_gradcheck_fixture(ModelKind kind, bool batch_norm, std::uint64_t seed);

}  // namespace afn
