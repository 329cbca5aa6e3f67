#include "afn/baselines.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "afn/training.hpp"

namespace afn {

LinearParams LinearParams::create(ParamStore& store, const Schema& schema,
                                  const std::string& prefix) {
  LinearParams p;
  p.schema = &schema;
  for (const FieldSchema& f : schema) {
    const std::string id = std::to_string(f.field_id);
    if (f.kind == FieldKind::kCategorical) {
      p.w_fields.push_back(
          &store.add(prefix + "w.cat." + id, {static_cast<std::size_t>(f.cardinality)}));
    } else {
      p.w_fields.push_back(&store.add(prefix + "w.num." + id, {1}));
    }
  }
  p.bias = &store.add(prefix + "b", {1});
  return p;
}

double lr_forward(const Instance& inst, const LinearParams& linear) {
  double z = linear.bias->value[0];
  const Schema& schema = *linear.schema;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (schema[i].kind == FieldKind::kCategorical) {
      z += linear.w_fields[i]->value[static_cast<std::size_t>(inst.values[i])];
    } else {
      z += linear.w_fields[i]->value[0] * inst.values[i];
    }
  }
  return z;
}

namespace {

void lr_backward(const Instance& inst, double dlogit, LinearParams& linear) {
  const Schema& schema = *linear.schema;
  linear.bias->grad[0] += dlogit;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (schema[i].kind == FieldKind::kCategorical) {
      linear.w_fields[i]->grad[static_cast<std::size_t>(inst.values[i])] += dlogit;
    } else {
      linear.w_fields[i]->grad[0] += dlogit * inst.values[i];
    }
  }
}

// Accumulates the (unclamped) embedding-output gradient into the tables.
void embed_backward_raw(const Instance& inst, const Mat& upstream, EmbeddingTables& tables) {
  const Schema& schema = *tables.schema;
  const std::size_t k = static_cast<std::size_t>(tables.embed_dim);
  for (std::size_t i = 0; i < schema.size(); ++i) {
    Tensor& t = *tables.fields[i];
    const double* up = upstream.row(i);
    if (schema[i].kind == FieldKind::kCategorical) {
      double* g = t.grad.data() + static_cast<std::size_t>(inst.values[i]) * k;
      for (std::size_t d = 0; d < k; ++d) g[d] += up[d];
    } else {
      const double x = inst.values[i];
      for (std::size_t d = 0; d < k; ++d) t.grad[d] += up[d] * x;
    }
  }
}

// Lexicographic next combination of size r from [0, m).
bool next_combination(std::vector<int>& c, int m) {
  const int r = static_cast<int>(c.size());
  int i = r - 1;
  while (i >= 0 && c[i] == m - r + i) --i;
  if (i < 0) return false;
  ++c[i];
  for (int t = i + 1; t < r; ++t) c[t] = c[t - 1] + 1;
  return true;
}

}  // namespace

double cross_term(const Mat& embeds, int min_order, int max_order, std::uint64_t* op_count) {
  const int m = static_cast<int>(embeds.rows);
  const std::size_t k = embeds.cols;
  double total = 0.0;
  for (int r = std::max(min_order, 1); r <= std::min(max_order, m); ++r) {
    std::vector<int> c(r);
    std::iota(c.begin(), c.end(), 0);
    do {
      double s = 0.0;
      for (std::size_t d = 0; d < k; ++d) {
        double prod = embeds(c[0], d);
        for (int t = 1; t < r; ++t) prod *= embeds(c[t], d);
        s += prod;
      }
      total += s;
      if (op_count != nullptr) *op_count += k;
    } while (next_combination(c, m));
  }
  return total;
}

double fm_forward(const Instance& inst, const LinearParams& linear,
                  const EmbeddingTables& tables) {
  return lr_forward(inst, linear) + cross_term(embed(inst, tables), 2, 2);
}

double hofm_forward(const Instance& inst, const LinearParams& linear,
                    const EmbeddingTables& tables, int max_order) {
  if (max_order < 2) throw std::invalid_argument("max-order must be >= 2");
  if (static_cast<std::size_t>(max_order) > tables.schema->size()) {
    throw std::invalid_argument("max-order must be <= the number of fields");
  }
  return lr_forward(inst, linear) + cross_term(embed(inst, tables), 2, max_order);
}

namespace {

// d(cross_term)/d(embeds): leave-one-out products per subset member.
void cross_term_backward(const Mat& embeds, int min_order, int max_order, double dlogit,
                         Mat& grad) {
  const int m = static_cast<int>(embeds.rows);
  const std::size_t k = embeds.cols;
  for (int r = std::max(min_order, 1); r <= std::min(max_order, m); ++r) {
    std::vector<int> c(r);
    std::iota(c.begin(), c.end(), 0);
    do {
      for (std::size_t d = 0; d < k; ++d) {
        for (int t = 0; t < r; ++t) {
          double loo = 1.0;
          for (int u = 0; u < r; ++u) {
            if (u != t) loo *= embeds(c[u], d);
          }
          grad(c[t], d) += dlogit * loo;
        }
      }
    } while (next_combination(c, m));
  }
}

}  // namespace

// ---- LR ----

LrModel::LrModel(Schema schema, ModelConfig config, std::uint64_t seed)
    : Model(std::move(schema), std::move(config)) {
  (void)seed;  // zero init; nothing to draw
  linear_ = LinearParams::create(store_, schema_, "lr.");
}

std::vector<double> LrModel::forward_batch(const Dataset& ds, std::span<const int> rows,
                                           Mode mode) {
  (void)mode;
  std::vector<double> out(rows.size());
  for (std::size_t b = 0; b < rows.size(); ++b) {
    out[b] = lr_forward(ds.instances[rows[b]], linear_);
  }
  return out;
}

double LrModel::forward_backward(const Dataset& ds, std::span<const int> rows) {
  store_.zero_grads();
  const auto batch = static_cast<double>(rows.size());
  double loss = 0.0;
  for (int r : rows) {
    const Instance& inst = ds.instances[r];
    const double z = lr_forward(inst, linear_);
    loss += stable_logloss(inst.label, z);
    lr_backward(inst, (sigmoid(z) - inst.label) / batch, linear_);
  }
  return loss / batch;
}

// ---- FM ----

FmModel::FmModel(Schema schema, ModelConfig config, std::uint64_t seed)
    : Model(std::move(schema), std::move(config)) {
  linear_ = LinearParams::create(store_, schema_, "fm.");
  tables_ = EmbeddingTables::create(store_, schema_, config_.embed_dim, "fm.");
  Rng rng(mix_seed(seed, kStreamInit));
  init_embeddings(tables_, rng, config_.init_scale);
}

std::vector<double> FmModel::forward_batch(const Dataset& ds, std::span<const int> rows,
                                           Mode mode) {
  (void)mode;
  std::vector<double> out(rows.size());
  for (std::size_t b = 0; b < rows.size(); ++b) {
    out[b] = fm_forward(ds.instances[rows[b]], linear_, tables_);
  }
  return out;
}

double FmModel::forward_backward(const Dataset& ds, std::span<const int> rows) {
  store_.zero_grads();
  const auto batch = static_cast<double>(rows.size());
  const std::size_t m = schema_.size();
  const std::size_t k = static_cast<std::size_t>(config_.embed_dim);
  double loss = 0.0;
  Mat grad_e(m, k);
  for (int r : rows) {
    const Instance& inst = ds.instances[r];
    const Mat e = embed(inst, tables_);
    const double z = lr_forward(inst, linear_) + cross_term(e, 2, 2);
    loss += stable_logloss(inst.label, z);
    const double dlogit = (sigmoid(z) - inst.label) / batch;
    lr_backward(inst, dlogit, linear_);

    // d/de_i of sum_{j2>j1} <e_j1, e_j2> is (sum_j e_j) - e_i.
    for (std::size_t d = 0; d < k; ++d) {
      double tot = 0.0;
      for (std::size_t i = 0; i < m; ++i) tot += e(i, d);
      for (std::size_t i = 0; i < m; ++i) grad_e(i, d) = dlogit * (tot - e(i, d));
    }
    embed_backward_raw(inst, grad_e, tables_);
  }
  return loss / batch;
}

// ---- HOFM ----

HofmModel::HofmModel(Schema schema, ModelConfig config, std::uint64_t seed)
    : Model(std::move(schema), std::move(config)) {
  if (config_.max_order < 2) throw std::invalid_argument("max-order must be >= 2");
  if (static_cast<std::size_t>(config_.max_order) > schema_.size()) {
    throw std::invalid_argument("max-order must be <= the number of fields");
  }
  linear_ = LinearParams::create(store_, schema_, "hofm.");
  tables_ = EmbeddingTables::create(store_, schema_, config_.embed_dim, "hofm.");
  Rng rng(mix_seed(seed, kStreamInit));
  init_embeddings(tables_, rng, config_.init_scale);
}

std::vector<double> HofmModel::forward_batch(const Dataset& ds, std::span<const int> rows,
                                             Mode mode) {
  (void)mode;
  std::vector<double> out(rows.size());
  for (std::size_t b = 0; b < rows.size(); ++b) {
    out[b] = hofm_forward(ds.instances[rows[b]], linear_, tables_, config_.max_order);
  }
  return out;
}

double HofmModel::forward_backward(const Dataset& ds, std::span<const int> rows) {
  store_.zero_grads();
  const auto batch = static_cast<double>(rows.size());
  const std::size_t m = schema_.size();
  const std::size_t k = static_cast<std::size_t>(config_.embed_dim);
  double loss = 0.0;
  for (int r : rows) {
    const Instance& inst = ds.instances[r];
    const Mat e = embed(inst, tables_);
    const double z = lr_forward(inst, linear_) + cross_term(e, 2, config_.max_order);
    loss += stable_logloss(inst.label, z);
    const double dlogit = (sigmoid(z) - inst.label) / batch;
    lr_backward(inst, dlogit, linear_);

    Mat grad_e(m, k);
    cross_term_backward(e, 2, config_.max_order, dlogit, grad_e);
    embed_backward_raw(inst, grad_e, tables_);
  }
  return loss / batch;
}

// ---- DNN ----

struct DnnModel::Cache {
  Mat z0;
  MlpCache mlp;
  Mat z_last;
  std::vector<double> logits;
};

DnnModel::DnnModel(Schema schema, ModelConfig config, std::uint64_t seed)
    : Model(std::move(schema), std::move(config)) {
  tables_ = EmbeddingTables::create(store_, schema_, config_.embed_dim, "dnn.");
  const std::size_t in_dim = schema_.size() * static_cast<std::size_t>(config_.embed_dim);
  mlp_ = MlpStack::create(store_, in_dim, config_.hidden, config_.batch_norm, "dnn.");
  head_ = PredictionHead::create(store_, mlp_.out_dim(in_dim), "dnn.");

  Rng rng(mix_seed(seed, kStreamInit));
  init_embeddings(tables_, rng, config_.init_scale);
  init_mlp(mlp_, rng);
  const double head_bound = std::sqrt(6.0 / static_cast<double>(head_.w->size()));
  for (double& v : head_.w->value) v = rng.uniform(-head_bound, head_bound);
}

void DnnModel::forward_impl(const Dataset& ds, std::span<const int> rows, Mode mode, Cache& c) {
  const std::size_t mk = schema_.size() * static_cast<std::size_t>(config_.embed_dim);
  c.z0 = Mat(rows.size(), mk);
  for (std::size_t b = 0; b < rows.size(); ++b) {
    embed_row(ds.instances[rows[b]], tables_, c.z0.row(b));
  }
  c.z_last = mlp_forward(c.z0, mlp_, mode, &c.mlp);
  c.logits.resize(rows.size());
  for (std::size_t b = 0; b < rows.size(); ++b) {
    c.logits[b] = predict_logit(std::span(c.z_last.row(b), c.z_last.cols), head_);
  }
}

std::vector<double> DnnModel::forward_batch(const Dataset& ds, std::span<const int> rows,
                                            Mode mode) {
  Cache c;
  forward_impl(ds, rows, mode, c);
  return std::move(c.logits);
}

double DnnModel::forward_backward(const Dataset& ds, std::span<const int> rows) {
  store_.zero_grads();
  Cache c;
  forward_impl(ds, rows, Mode::kTrain, c);

  const std::size_t batch = rows.size();
  const std::size_t m = schema_.size();
  const std::size_t k = static_cast<std::size_t>(config_.embed_dim);
  double loss = 0.0;
  std::vector<double> dlogit(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const int y = ds.instances[rows[b]].label;
    loss += stable_logloss(y, c.logits[b]);
    dlogit[b] = (sigmoid(c.logits[b]) - y) / static_cast<double>(batch);
  }
  loss /= static_cast<double>(batch);

  const std::size_t width = c.z_last.cols;
  Mat gz(batch, width);
  for (std::size_t b = 0; b < batch; ++b) {
    const double g = dlogit[b];
    head_.b->grad[0] += g;
    const double* zr = c.z_last.row(b);
    double* gzr = gz.row(b);
    for (std::size_t i = 0; i < width; ++i) {
      head_.w->grad[i] += g * zr[i];
      gzr[i] = g * head_.w->value[i];
    }
  }

  Mat gz0 = mlp_backward(gz, mlp_, c.mlp);
  Mat up(m, k);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* gr = gz0.row(b);
    std::copy(gr, gr + m * k, up.a.begin());
    embed_backward_raw(ds.instances[rows[b]], up, tables_);
  }
  return loss;
}

}  // namespace afn
