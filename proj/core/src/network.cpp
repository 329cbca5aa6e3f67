#include "afn/network.hpp"

#include <cmath>
#include <stdexcept>

namespace afn {

DenseLayer DenseLayer::create(ParamStore& store, std::size_t out, std::size_t in,
                              const std::string& name_prefix) {
  DenseLayer l;
  l.w = &store.add(name_prefix + ".W", {out, in});
  l.b = &store.add(name_prefix + ".b", {out});
  return l;
}

void init_dense(DenseLayer& layer, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(layer.w->cols()));
  for (double& v : layer.w->value) v = rng.uniform(-bound, bound);
  // biases stay zero
}

BatchNorm BatchNorm::create(ParamStore& store, std::size_t width, const std::string& site,
                            const std::string& prefix) {
  BatchNorm bn;
  const std::string base = prefix + "bn." + site + ".";
  bn.gamma = &store.add(base + "gamma", {width});
  bn.beta = &store.add(base + "beta", {width});
  bn.running_mean = &store.add(base + "running_mean", {width}, /*trainable=*/false);
  bn.running_var = &store.add(base + "running_var", {width}, /*trainable=*/false);
  std::fill(bn.gamma->value.begin(), bn.gamma->value.end(), 1.0);
  std::fill(bn.running_var->value.begin(), bn.running_var->value.end(), 1.0);
  return bn;
}

BatchNorm BatchNorm::off() {
  BatchNorm bn;
  bn.enabled = false;
  return bn;
}

Mat bn_forward_train(const Mat& x, BatchNorm& bn, BnCache& cache, bool update_running) {
  if (!bn.enabled) {
    cache.identity = true;
    return x;
  }
  const std::size_t b = x.rows;
  const std::size_t c = x.cols;
  if (b < 2) {
    throw std::invalid_argument("bn_forward: train mode requires batch size >= 2");
  }
  if (bn.gamma->size() != c) throw std::invalid_argument("bn_forward: width mismatch");

  cache.identity = false;
  cache.xhat = Mat(b, c);
  cache.inv_std.assign(c, 0.0);

  Mat out(b, c);
  for (std::size_t j = 0; j < c; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < b; ++i) mean += x(i, j);
    mean /= static_cast<double>(b);
    double var = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      const double d = x(i, j) - mean;
      var += d * d;
    }
    var /= static_cast<double>(b);

    const double inv_std = 1.0 / std::sqrt(var + bn.eps);
    cache.inv_std[j] = inv_std;
    const double g = bn.gamma->value[j];
    const double be = bn.beta->value[j];
    for (std::size_t i = 0; i < b; ++i) {
      const double xh = (x(i, j) - mean) * inv_std;
      cache.xhat(i, j) = xh;
      out(i, j) = g * xh + be;
    }
    if (update_running) {
      bn.running_mean->value[j] = bn.momentum * bn.running_mean->value[j] + (1.0 - bn.momentum) * mean;
      bn.running_var->value[j] = bn.momentum * bn.running_var->value[j] + (1.0 - bn.momentum) * var;
    }
  }
  return out;
}

Mat bn_forward(const Mat& x, BatchNorm& bn, Mode mode) {
  if (!bn.enabled) return x;
  if (mode == Mode::kTrain) {
    BnCache scratch;
    return bn_forward_train(x, bn, scratch, /*update_running=*/true);
  }
  const std::size_t b = x.rows;
  const std::size_t c = x.cols;
  if (bn.gamma->size() != c) throw std::invalid_argument("bn_forward: width mismatch");
  Mat out(b, c);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double inv_std = 1.0 / std::sqrt(bn.running_var->value[j] + bn.eps);
      out(i, j) = bn.gamma->value[j] * (x(i, j) - bn.running_mean->value[j]) * inv_std +
                  bn.beta->value[j];
    }
  }
  return out;
}

Mat bn_backward(const Mat& gy, const BatchNorm& bn, const BnCache& cache) {
  if (cache.identity) return gy;
  const std::size_t b = gy.rows;
  const std::size_t c = gy.cols;
  Mat gx(b, c);
  for (std::size_t j = 0; j < c; ++j) {
    const double g = bn.gamma->value[j];
    double sum_gy = 0.0;
    double sum_gy_xhat = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      sum_gy += gy(i, j);
      sum_gy_xhat += gy(i, j) * cache.xhat(i, j);
    }
    bn.beta->grad[j] += sum_gy;
    bn.gamma->grad[j] += sum_gy_xhat;

    const double scale = g * cache.inv_std[j] / static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i) {
      gx(i, j) = scale * (static_cast<double>(b) * gy(i, j) - sum_gy -
                          cache.xhat(i, j) * sum_gy_xhat);
    }
  }
  return gx;
}

std::vector<double> concat_neurons(const Mat& y) {
  return y.a;  // row-major storage is already the neuron-major flattening
}

MlpStack MlpStack::create(ParamStore& store, std::size_t in_dim, const std::vector<int>& hidden,
                          bool batch_norm, const std::string& prefix) {
  MlpStack mlp;
  std::size_t cur = in_dim;
  for (std::size_t l = 0; l < hidden.size(); ++l) {
    if (hidden[l] < 1) throw std::invalid_argument("hidden layer width must be >= 1");
    const auto width = static_cast<std::size_t>(hidden[l]);
    const std::string id = std::to_string(l + 1);
    mlp.layers.push_back(DenseLayer::create(store, width, cur, prefix + "mlp." + id));
    mlp.bns.push_back(batch_norm ? BatchNorm::create(store, width, "h" + id, prefix)
                                 : BatchNorm::off());
    cur = width;
  }
  return mlp;
}

std::size_t MlpStack::out_dim(std::size_t in_dim) const {
  return layers.empty() ? in_dim : layers.back().w->rows();
}

void init_mlp(MlpStack& mlp, Rng& rng) {
  for (DenseLayer& l : mlp.layers) init_dense(l, rng);
}

Mat mlp_forward(const Mat& z0, MlpStack& mlp, Mode mode, MlpCache* cache) {
  if (cache != nullptr) {
    cache->inputs.clear();
    cache->bn.clear();
    cache->postbn.clear();
  }
  Mat z = z0;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const DenseLayer& layer = mlp.layers[l];
    const std::size_t out = layer.w->rows();
    const std::size_t in = layer.w->cols();
    if (z.cols != in) throw std::invalid_argument("mlp_forward: shape mismatch at layer " +
                                                  std::to_string(l + 1));
    if (cache != nullptr) cache->inputs.push_back(z);

    Mat a(z.rows, out);
    for (std::size_t r = 0; r < z.rows; ++r) {
      const double* zr = z.row(r);
      double* ar = a.row(r);
      for (std::size_t o = 0; o < out; ++o) {
        const double* wr = layer.w->value.data() + o * in;
        double acc = layer.b->value[o];
        for (std::size_t i = 0; i < in; ++i) acc += wr[i] * zr[i];
        ar[o] = acc;
      }
    }

    Mat h;
    if (mode == Mode::kTrain) {
      BnCache bc;
      h = bn_forward_train(a, mlp.bns[l], bc, /*update_running=*/true);
      if (cache != nullptr) cache->bn.push_back(std::move(bc));
    } else {
      h = bn_forward(a, mlp.bns[l], Mode::kInfer);
      if (cache != nullptr) cache->bn.push_back(BnCache{});
    }
    if (cache != nullptr) cache->postbn.push_back(h);

    for (double& v : h.a) v = v > 0.0 ? v : 0.0;
    z = std::move(h);
  }
  return z;
}

Mat mlp_backward(const Mat& g_out, const MlpStack& mlp, const MlpCache& cache) {
  Mat g = g_out;
  for (std::size_t li = mlp.layers.size(); li-- > 0;) {
    const DenseLayer& layer = mlp.layers[li];
    const Mat& postbn = cache.postbn[li];
    const Mat& z_in = cache.inputs[li];
    const std::size_t out = layer.w->rows();
    const std::size_t in = layer.w->cols();

    // ReLU mask on the post-BN pre-activation.
    Mat gh(g.rows, g.cols);
    for (std::size_t i = 0; i < g.size(); ++i) {
      gh.a[i] = postbn.a[i] > 0.0 ? g.a[i] : 0.0;
    }

    Mat ga = bn_backward(gh, mlp.bns[li], cache.bn[li]);

    Mat gz(g.rows, in);
    for (std::size_t r = 0; r < g.rows; ++r) {
      const double* gar = ga.row(r);
      const double* zr = z_in.row(r);
      double* gzr = gz.row(r);
      for (std::size_t o = 0; o < out; ++o) {
        const double go = gar[o];
        layer.b->grad[o] += go;
        double* wg = layer.w->grad.data() + o * in;
        const double* wv = layer.w->value.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) {
          wg[i] += go * zr[i];
          gzr[i] += go * wv[i];
        }
      }
    }
    g = std::move(gz);
  }
  return g;
}

PredictionHead PredictionHead::create(ParamStore& store, std::size_t width,
                                      const std::string& prefix) {
  PredictionHead h;
  h.w = &store.add(prefix + "head.w", {width});
  h.b = &store.add(prefix + "head.b", {1});
  return h;
}

double predict_logit(std::span<const double> z, const PredictionHead& head) {
  if (z.size() != head.w->size()) throw std::invalid_argument("predict_logit: length mismatch");
  double acc = head.b->value[0];
  for (std::size_t i = 0; i < z.size(); ++i) acc += head.w->value[i] * z[i];
  return acc;
}

}  // namespace afn
