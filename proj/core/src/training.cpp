#include "afn/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "afn/errors.hpp"
#include "afn/text.hpp"

namespace afn {

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double stable_logloss(int label, double logit) {
  return std::max(logit, 0.0) - logit * label + std::log1p(std::exp(-std::abs(logit)));
}

double logloss(std::span<const int> labels, std::span<const double> logits) {
  if (labels.empty()) throw std::invalid_argument("logloss: empty batch");
  if (labels.size() != logits.size()) throw std::invalid_argument("logloss: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) s += stable_logloss(labels[i], logits[i]);
  return s / static_cast<double>(labels.size());
}

double auc(std::span<const int> labels, std::span<const double> scores) {
  const std::size_t n = labels.size();
  if (n != scores.size()) throw std::invalid_argument("auc: length mismatch");
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += y == 1 ? 1 : 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("auc: need at least one positive and one negative label");
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return scores[a] < scores[b]; });

  // Rank-sum with average ranks over tied score groups (ties earn 1/2).
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based ranks i+1..j
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] == 1) pos_rank_sum += avg_rank;
    }
    i = j;
  }
  const double u = pos_rank_sum - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

namespace {

int num_threads_from_env() {
  const char* s = std::getenv("AFN_NUM_THREADS");
  if (s == nullptr) return 1;
  const long v = std::strtol(s, nullptr, 10);
  return v < 1 ? 1 : static_cast<int>(v);
}

// Infer-mode logits for [begin, end), sub-batched to bound stage buffers.
void predict_range(Model& model, const Dataset& ds, std::size_t begin, std::size_t end,
                   std::vector<double>& out) {
  constexpr std::size_t kChunk = 8192;
  std::vector<int> rows;
  for (std::size_t start = begin; start < end; start += kChunk) {
    const std::size_t stop = std::min(end, start + kChunk);
    rows.resize(stop - start);
    std::iota(rows.begin(), rows.end(), static_cast<int>(start));
    auto logits = model.forward_batch(ds, rows, Mode::kInfer);
    std::copy(logits.begin(), logits.end(), out.begin() + start);
  }
}

}  // namespace

std::vector<double> predict_logits(Model& model, const Dataset& ds) {
  std::vector<double> out(ds.size());
  const int threads = std::min<int>(num_threads_from_env(),
                                    static_cast<int>(std::max<std::size_t>(ds.size() / 1024, 1)));
  if (threads <= 1) {
    predict_range(model, ds, 0, ds.size(), out);
    return out;
  }
  std::vector<std::thread> pool;
  const std::size_t per = (ds.size() + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::size_t begin = t * per;
    const std::size_t end = std::min(ds.size(), begin + per);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] { predict_range(model, ds, begin, end, out); });
  }
  for (auto& th : pool) th.join();
  return out;
}

Metrics evaluate_model(Model& model, const Dataset& ds) {
  const std::vector<double> logits = predict_logits(model, ds);
  std::vector<int> labels(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) labels[i] = ds.instances[i].label;
  Metrics m;
  m.auc = auc(labels, logits);
  m.logloss = logloss(labels, logits);
  return m;
}

AdamState::AdamState(ParamStore& store) {
  for (Tensor* t : store.trainable_tensors()) {
    m_.emplace_back(t->size(), 0.0);
    v_.emplace_back(t->size(), 0.0);
  }
}

void adam_step(ParamStore& store, AdamState& state, const TrainConfig& cfg) {
  if (!(cfg.adam_beta1 > 0 && cfg.adam_beta1 < 1 && cfg.adam_beta2 > 0 && cfg.adam_beta2 < 1)) {
    throw std::invalid_argument("adam_step: betas must lie in (0,1)");
  }
  auto tensors = store.trainable_tensors();
  if (tensors.size() != state.m_.size()) {
    throw std::invalid_argument("adam_step: state does not match the parameter store");
  }
  state.t_ += 1;
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.t_));
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.t_));
  for (std::size_t ti = 0; ti < tensors.size(); ++ti) {
    Tensor& t = *tensors[ti];
    auto& m = state.m_[ti];
    auto& v = state.v_[ti];
    if (m.size() != t.size()) throw std::invalid_argument("adam_step: shape mismatch");
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double g = t.grad[i];
      m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g;
      v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      t.value[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    }
  }
}

void write_metrics_csv(const std::string& path, std::span<const EpochLog> log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << "epoch,train_logloss,val_auc,val_logloss\n";
  for (const EpochLog& e : log) {
    out << e.epoch << ',' << fmt_double(e.train_logloss) << ',' << fmt_double(e.val_auc) << ','
        << fmt_double(e.val_logloss) << '\n';
  }
}

TrainResult train(Model& model, const Dataset& train_ds, const Dataset& val_ds,
                  const TrainConfig& cfg, const SnapshotSink& snapshot_sink) {
  if (train_ds.instances.empty()) throw std::invalid_argument("train: empty training set");
  if (cfg.learning_rate <= 0) throw std::invalid_argument("train: learning_rate must be > 0");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (cfg.max_epochs < 1) throw std::invalid_argument("train: max_epochs must be >= 1");
  if (cfg.patience < 0) throw std::invalid_argument("train: patience must be >= 0");
  bool has_pos = false;
  bool has_neg = false;
  for (const Instance& inst : val_ds.instances) {
    (inst.label == 1 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) {
    throw std::invalid_argument("train: validation set must contain both classes");
  }

  AdamState adam(model.params());
  TrainResult result;
  double best_auc = -1.0;
  std::vector<std::vector<double>> best_values;
  int epochs_since_improve = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    auto batches = make_batches(train_ds.size(), cfg.batch_size, /*shuffle=*/true, cfg.seed, epoch);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (const auto& rows : batches) {
      // Train-mode BN needs at least two rows; a trailing singleton is skipped.
      if (rows.size() < 2 && model.uses_batch_stats()) continue;
      const double loss = model.forward_backward(train_ds, rows);
      if (!std::isfinite(loss)) {
        throw NumericError("train: non-finite loss at step " + std::to_string(adam.step_count() + 1));
      }
      adam_step(model.params(), adam, cfg);
      loss_sum += loss * static_cast<double>(rows.size());
      seen += rows.size();
    }

    if (seen == 0) {
      throw std::invalid_argument("train: every batch was degenerate (single row with BN on)");
    }
    const Metrics vm = evaluate_model(model, val_ds);
    result.log.push_back({epoch, loss_sum / static_cast<double>(seen), vm.auc, vm.logloss});

    if (vm.auc > best_auc) {
      best_auc = vm.auc;
      best_values = model.params().snapshot_values();
      result.best_epoch = epoch;
      result.best_val_auc = vm.auc;
      result.best_val_logloss = vm.logloss;
      epochs_since_improve = 0;
    } else {
      ++epochs_since_improve;
    }

    if (snapshot_sink && cfg.snapshot_every > 0 && epoch % cfg.snapshot_every == 0) {
      snapshot_sink(model, adam.step_count(), epoch);
    }

    if (epochs_since_improve > cfg.patience) break;
  }

  result.total_steps = adam.step_count();
  model.params().restore_values(best_values);
  return result;
}

// ---- gradient checking ----

double model_batch_loss(Model& model, const Dataset& ds, std::span<const int> rows) {
  const auto logits = model.forward_batch(ds, rows, Mode::kTrain);
  std::vector<int> labels(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = ds.instances[rows[i]].label;
  return logloss(labels, logits);
}

std::map<std::string, std::vector<double>> fd_gradients(Model& model, const Dataset& ds,
                                                        std::span<const int> rows, double h) {
  std::map<std::string, std::vector<double>> out;
  for (Tensor* t : model.params().trainable_tensors()) {
    std::vector<double> g(t->size());
    for (std::size_t i = 0; i < t->size(); ++i) {
      const double v0 = t->value[i];
      t->value[i] = v0 + h;
      const double lp = model_batch_loss(model, ds, rows);
      t->value[i] = v0 - h;
      const double lm = model_batch_loss(model, ds, rows);
      t->value[i] = v0;
      g[i] = (lp - lm) / (2.0 * h);
    }
    out[t->name] = std::move(g);
  }
  return out;
}

double max_relative_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("max_relative_error: length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({1e-6, std::abs(a[i]), std::abs(b[i])});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

GradCheckResult grad_check(Model& model, const Dataset& ds, std::span<const int> rows, double h) {
  model.forward_backward(ds, rows);
  std::map<std::string, std::vector<double>> analytic;
  for (Tensor* t : model.params().trainable_tensors()) analytic[t->name] = t->grad;

  const auto numeric = fd_gradients(model, ds, rows, h);

  GradCheckResult res;
  for (const auto& [name, fd] : numeric) {
    const double err = max_relative_error(analytic.at(name), fd);
    res.per_tensor.emplace_back(name, err);
    if (err > res.max_rel_error) {
      res.max_rel_error = err;
      res.worst_tensor = name;
    }
  }
  return res;
}

GradCheckFixture make_gradcheck_fixture(ModelKind kind, bool batch_norm, std::uint64_t seed) {
  GradCheckFixture fx;

  Schema schema;
  schema.push_back({0, "a", FieldKind::kCategorical, 5, {{"a1", 1}, {"a2", 2}, {"a3", 3}, {"a4", 4}}});
  schema.push_back({1, "b", FieldKind::kCategorical, 4, {{"b1", 1}, {"b2", 2}, {"b3", 3}}});
  schema.push_back({2, "x", FieldKind::kNumerical, 1, {}});
  fx.data.schema = schema;

  Rng rng(mix_seed(seed, kStreamFixture));
  constexpr int kBatch = 8;
  for (int i = 0; i < kBatch; ++i) {
    Instance inst;
    // Guarantee both classes, then randomize the rest.
    inst.label = i == 0 ? 1 : (i == 1 ? 0 : static_cast<int>(rng.uniform_int(2)));
    inst.values = {static_cast<double>(rng.uniform_int(5)), static_cast<double>(rng.uniform_int(4)),
                   (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.5, 1.5)};
    fx.data.instances.push_back(std::move(inst));
    fx.rows.push_back(i);
  }

  ModelConfig cfg;
  cfg.embed_dim = 2;
  cfg.log_neurons = 2;
  cfg.hidden = {4};
  cfg.batch_norm = batch_norm;
  cfg.max_order = 3;
  fx.model = make_model(kind, schema, cfg, seed);

  // Redraw embeddings at magnitudes far from both the clamp floor and the
  // finite-difference step so the loss is smooth around every probe.
  for (const auto& t : fx.model->params().tensors()) {
    if (t->name.find("embed.") == std::string::npos) continue;
    for (double& v : t->value) {
      v = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.1, 0.5);
    }
  }
  return fx;
}

}  // namespace afn
