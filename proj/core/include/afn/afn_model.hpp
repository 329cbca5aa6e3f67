#pragma once

#include "afn/embedding.hpp"
#include "afn/model.hpp"
#include "afn/network.hpp"

namespace afn {

// The adaptive factorization network: clamped positive embeddings, ln, a
// learned m x N exponent matrix applied in log space, exp, then an optional
// MLP and a scalar head. Batch normalization sits after ln (or after the
// log-space weighted sum, per config), after exp, and after each hidden
// affine layer before ReLU.
class AfnModel : public Model {
 public:
  AfnModel(Schema schema, ModelConfig config, std::uint64_t seed);

  ModelKind kind() const override { return ModelKind::kAfn; }
  bool uses_batch_stats() const override { return config_.batch_norm; }

  std::vector<double> forward_batch(const Dataset& ds, std::span<const int> rows,
                                    Mode mode) override;
  double forward_backward(const Dataset& ds, std::span<const int> rows) override;

  const EmbeddingTables& tables() const { return tables_; }
  const Tensor& ltl_weights() const { return *ltl_w_; }

 private:
  struct Cache;
  void forward_impl(const Dataset& ds, std::span<const int> rows, Mode mode, Cache& c);

  EmbeddingTables tables_;
  Tensor* ltl_w_ = nullptr;  // [m, N]
  BatchNorm bn_ln_;
  BatchNorm bn_exp_;
  MlpStack mlp_;
  PredictionHead head_;
};

}  // namespace afn
