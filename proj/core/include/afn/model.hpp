#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "afn/data.hpp"
#include "afn/network.hpp"
#include "afn/tensor.hpp"

namespace afn {

enum class ModelKind { kLr, kFm, kHofm, kDnn, kAfn };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

// Placement of the BN site that normalizes the "logarithmic transformation"
// output: directly after ln (per field/dim coordinate) or after the weighted
// sum in log space (per neuron/dim coordinate).
enum class BnLnSite { kPostLn, kPostSum };

// Union of per-model hyperparameters; each model reads what it uses.
struct ModelConfig {
  int embed_dim = 10;
  int log_neurons = 32;            // AFN
  std::vector<int> hidden;         // AFN / DNN hidden widths; empty = depth 0
  bool batch_norm = true;          // AFN / DNN
  BnLnSite bn_ln_site = BnLnSite::kPostLn;
  int max_order = 3;               // HOFM
  double clamp_epsilon = 1e-7;     // AFN embedding positivity floor
  double init_scale = 1.0;         // s in U[-0.01 s, 0.01 s]
};

class Model {
 public:
  virtual ~Model() = default;

  virtual ModelKind kind() const = 0;
  const Schema& schema() const { return schema_; }
  const ModelConfig& config() const { return config_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  // True when train-mode forward couples rows through batch statistics; the
  // training loop then skips degenerate single-row batches.
  virtual bool uses_batch_stats() const { return false; }

  // Logits for the given dataset rows.
  virtual std::vector<double> forward_batch(const Dataset& ds, std::span<const int> rows,
                                            Mode mode) = 0;

  // Train-mode forward plus exact reverse pass of the mean log loss over the
  // rows; gradients are accumulated into every trainable tensor (grads are
  // zeroed first). Returns the loss.
  virtual double forward_backward(const Dataset& ds, std::span<const int> rows) = 0;

 protected:
  Model(Schema schema, ModelConfig config)
      : schema_(std::move(schema)), config_(std::move(config)) {}

  Schema schema_;
  ModelConfig config_;
  ParamStore store_;
};

std::unique_ptr<Model> make_model(ModelKind kind, const Schema& schema, const ModelConfig& config,
                                  std::uint64_t seed);

}  // namespace afn
