#include "afn/afn_model.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "afn/logtransform.hpp"
#include "afn/training.hpp"

namespace afn {

struct AfnModel::Cache {
  Mat p;      // B x m*k, clamped embeddings
  Mat lm;     // B x m*k, ln p
  BnCache bn_ln;
  Mat l1;     // input to the weighted sum (post bn.ln when site = post-ln)
  Mat s;      // B x N*k, log-space weighted sums
  Mat s_fin;  // input to exp (post bn.ln when site = post-sum)
  std::vector<std::uint8_t> in_range;
  Mat y;      // exp output
  BnCache bn_exp;
  Mat y_bn;
  MlpCache mlp;
  Mat z_last;
  std::vector<double> logits;
};

AfnModel::AfnModel(Schema schema, ModelConfig config, std::uint64_t seed)
    : Model(std::move(schema), std::move(config)) {
  const std::size_t m = schema_.size();
  const auto k = static_cast<std::size_t>(config_.embed_dim);
  const auto n = static_cast<std::size_t>(config_.log_neurons);
  if (config_.log_neurons < 1) throw std::invalid_argument("log_neurons must be >= 1");
  if (config_.clamp_epsilon <= 0) throw std::invalid_argument("clamp_epsilon must be > 0");

  tables_ = EmbeddingTables::create(store_, schema_, config_.embed_dim);
  ltl_w_ = &store_.add("ltl.W", {m, n});

  if (config_.batch_norm) {
    const std::size_t ln_width = config_.bn_ln_site == BnLnSite::kPostLn ? m * k : n * k;
    bn_ln_ = BatchNorm::create(store_, ln_width, "ln");
    bn_exp_ = BatchNorm::create(store_, n * k, "exp");
  } else {
    bn_ln_ = BatchNorm::off();
    bn_exp_ = BatchNorm::off();
  }

  mlp_ = MlpStack::create(store_, n * k, config_.hidden, config_.batch_norm);
  head_ = PredictionHead::create(store_, mlp_.out_dim(n * k));

  Rng rng(mix_seed(seed, kStreamInit));
  init_embeddings(tables_, rng, config_.init_scale);
  // Near-zero-order start: outputs begin close to 1 and the log-space
  // gradients stay moderate.
  const double w_hi = 1.0 / static_cast<double>(m);
  for (double& v : ltl_w_->value) v = rng.uniform(0.0, w_hi);
  init_mlp(mlp_, rng);
  const double head_bound = std::sqrt(6.0 / static_cast<double>(head_.w->size()));
  for (double& v : head_.w->value) v = rng.uniform(-head_bound, head_bound);
}

void AfnModel::forward_impl(const Dataset& ds, std::span<const int> rows, Mode mode, Cache& c) {
  const std::size_t batch = rows.size();
  const std::size_t m = schema_.size();
  const auto k = static_cast<std::size_t>(config_.embed_dim);
  const auto n = static_cast<std::size_t>(config_.log_neurons);
  const std::size_t mk = m * k;
  const std::size_t nk = n * k;
  const double eps = config_.clamp_epsilon;

  c.p = Mat(batch, mk);
  c.lm = Mat(batch, mk);
  std::vector<double> ebuf(mk);
  for (std::size_t b = 0; b < batch; ++b) {
    embed_row(ds.instances[rows[b]], tables_, ebuf.data());
    double* p = c.p.row(b);
    double* lm = c.lm.row(b);
    for (std::size_t i = 0; i < mk; ++i) {
      p[i] = std::max(std::abs(ebuf[i]), eps);
      lm[i] = std::log(p[i]);
    }
  }

  const bool post_ln = config_.bn_ln_site == BnLnSite::kPostLn;
  if (post_ln && bn_ln_.enabled) {
    c.l1 = mode == Mode::kTrain ? bn_forward_train(c.lm, bn_ln_, c.bn_ln)
                                : bn_forward(c.lm, bn_ln_, Mode::kInfer);
  } else {
    c.l1 = c.lm;
    c.bn_ln.identity = true;
  }

  // s(b, j*k+d) = sum_i W(i,j) * l1(b, i*k+d)
  c.s = Mat(batch, nk);
  const double* w = ltl_w_->value.data();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* lrow = c.l1.row(b);
    double* srow = c.s.row(b);
    for (std::size_t i = 0; i < m; ++i) {
      const double* li = lrow + i * k;
      const double* wi = w + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double wij = wi[j];
        double* sj = srow + j * k;
        for (std::size_t d = 0; d < k; ++d) sj[d] += wij * li[d];
      }
    }
  }

  if (!post_ln && bn_ln_.enabled) {
    c.s_fin = mode == Mode::kTrain ? bn_forward_train(c.s, bn_ln_, c.bn_ln)
                                   : bn_forward(c.s, bn_ln_, Mode::kInfer);
  } else {
    c.s_fin = c.s;
  }

  c.y = Mat(batch, nk);
  c.in_range.assign(batch * nk, 1);
  for (std::size_t i = 0; i < c.y.size(); ++i) {
    double s = c.s_fin.a[i];
    if (s > kLtlSatLimit) {
      s = kLtlSatLimit;
      c.in_range[i] = 0;
    } else if (s < -kLtlSatLimit) {
      s = -kLtlSatLimit;
      c.in_range[i] = 0;
    }
    c.y.a[i] = std::exp(s);
  }

  if (bn_exp_.enabled) {
    c.y_bn = mode == Mode::kTrain ? bn_forward_train(c.y, bn_exp_, c.bn_exp)
                                  : bn_forward(c.y, bn_exp_, Mode::kInfer);
  } else {
    c.y_bn = c.y;
    c.bn_exp.identity = true;
  }

  c.z_last = mlp_forward(c.y_bn, mlp_, mode, &c.mlp);

  c.logits.resize(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    c.logits[b] = predict_logit(std::span(c.z_last.row(b), c.z_last.cols), head_);
  }
}

std::vector<double> AfnModel::forward_batch(const Dataset& ds, std::span<const int> rows,
                                            Mode mode) {
  Cache c;
  forward_impl(ds, rows, mode, c);
  return std::move(c.logits);
}

double AfnModel::forward_backward(const Dataset& ds, std::span<const int> rows) {
  store_.zero_grads();
  Cache c;
  forward_impl(ds, rows, Mode::kTrain, c);

  const std::size_t batch = rows.size();
  const std::size_t m = schema_.size();
  const auto k = static_cast<std::size_t>(config_.embed_dim);
  const auto n = static_cast<std::size_t>(config_.log_neurons);
  const std::size_t mk = m * k;
  const std::size_t nk = n * k;

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

  Mat gy_bn = mlp_backward(gz, mlp_, c.mlp);
  Mat gy = bn_backward(gy_bn, bn_exp_, c.bn_exp);

  Mat gs_fin(batch, nk);
  for (std::size_t i = 0; i < gs_fin.size(); ++i) {
    gs_fin.a[i] = c.in_range[i] ? gy.a[i] * c.y.a[i] : 0.0;
  }

  const bool post_ln = config_.bn_ln_site == BnLnSite::kPostLn;
  Mat gs = post_ln ? std::move(gs_fin) : bn_backward(gs_fin, bn_ln_, c.bn_ln);

  Mat gl1(batch, mk);
  double* wg = ltl_w_->grad.data();
  const double* w = ltl_w_->value.data();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* lrow = c.l1.row(b);
    const double* gsrow = gs.row(b);
    double* glrow = gl1.row(b);
    for (std::size_t i = 0; i < m; ++i) {
      const double* li = lrow + i * k;
      double* gli = glrow + i * k;
      const double* wi = w + i * n;
      double* wgi = wg + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double* gsj = gsrow + j * k;
        const double wij = wi[j];
        double acc = 0.0;
        for (std::size_t d = 0; d < k; ++d) {
          acc += gsj[d] * li[d];
          gli[d] += wij * gsj[d];
        }
        wgi[j] += acc;
      }
    }
  }

  Mat glm = post_ln ? bn_backward(gl1, bn_ln_, c.bn_ln) : std::move(gl1);

  Mat up(m, k);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* glrow = glm.row(b);
    const double* prow = c.p.row(b);
    for (std::size_t i = 0; i < mk; ++i) up.a[i] = glrow[i] / prow[i];
    embed_backward(ds.instances[rows[b]], up, config_.clamp_epsilon, tables_);
  }

  return loss;
}

}  // namespace afn
