#pragma once

#include <span>
#include <string>
#include <vector>

#include "afn/mat.hpp"
#include "afn/rng.hpp"
#include "afn/tensor.hpp"

namespace afn {

// Train mode uses batch statistics in BN layers and updates their running
// averages; infer mode is a pure per-row function of the parameters.
enum class Mode { kTrain, kInfer };

struct DenseLayer {
  Tensor* w = nullptr;  // [out, in]
  Tensor* b = nullptr;  // [out]

  static DenseLayer create(ParamStore& store, std::size_t out, std::size_t in,
                           const std::string& name_prefix);
};

// He-style fan-in uniform init: U[-sqrt(6/fan_in), sqrt(6/fan_in)]; bias 0.
void init_dense(DenseLayer& layer, Rng& rng);

struct BatchNorm {
  Tensor* gamma = nullptr;
  Tensor* beta = nullptr;
  Tensor* running_mean = nullptr;
  Tensor* running_var = nullptr;
  double momentum = 0.9;
  double eps = 1e-5;
  bool enabled = true;

  // Registers `<prefix>bn.<site>.{gamma,beta,running_mean,running_var}`.
  static BatchNorm create(ParamStore& store, std::size_t width, const std::string& site,
                          const std::string& prefix = "");
  // Identity bypass used when batch normalization is configured off.
  static BatchNorm off();
};

struct BnCache {
  Mat xhat;
  std::vector<double> inv_std;
  bool identity = false;
};

// Train mode normalizes per coordinate by batch mean/variance, applies
// gamma/beta, and (when update_running) folds the batch statistics into the
// running averages with the configured momentum. Infer mode normalizes with
// the running statistics only. Train mode requires at least 2 rows.
Mat bn_forward(const Mat& x, BatchNorm& bn, Mode mode);
Mat bn_forward_train(const Mat& x, BatchNorm& bn, BnCache& cache, bool update_running = true);
// Accumulates gamma/beta grads and returns the input gradient.
Mat bn_backward(const Mat& gy, const BatchNorm& bn, const BnCache& cache);

// Row-major flattening of an N x k matrix, neuron-major order.
std::vector<double> concat_neurons(const Mat& y);

struct MlpStack {
  std::vector<DenseLayer> layers;
  std::vector<BatchNorm> bns;  // parallel to layers

  // Hidden sizes chained from in_dim; sites named `h1..hL` under prefix.
  static MlpStack create(ParamStore& store, std::size_t in_dim, const std::vector<int>& hidden,
                         bool batch_norm, const std::string& prefix = "");
  std::size_t out_dim(std::size_t in_dim) const;
};

void init_mlp(MlpStack& mlp, Rng& rng);

struct MlpCache {
  std::vector<Mat> inputs;   // z_{l-1} per layer
  std::vector<BnCache> bn;   // per layer
  std::vector<Mat> postbn;   // BN output, pre-ReLU, per layer
};

// z_l = ReLU(BN_l(W_l z_{l-1} + b_l)) for l = 1..L; L = 0 passes z0 through.
Mat mlp_forward(const Mat& z0, MlpStack& mlp, Mode mode, MlpCache* cache = nullptr);
// Accumulates layer grads; returns gradient w.r.t. z0.
Mat mlp_backward(const Mat& g_out, const MlpStack& mlp, const MlpCache& cache);

struct PredictionHead {
  Tensor* w = nullptr;  // [width]
  Tensor* b = nullptr;  // [1]

  static PredictionHead create(ParamStore& store, std::size_t width,
                               const std::string& prefix = "");
};

double predict_logit(std::span<const double> z, const PredictionHead& head);

}  // namespace afn
