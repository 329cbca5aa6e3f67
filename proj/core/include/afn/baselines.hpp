#pragma once

#include <cstdint>

#include "afn/embedding.hpp"
#include "afn/model.hpp"
#include "afn/network.hpp"

namespace afn {

// First-order weights: one per categorical vocabulary entry, one per
// numerical field, plus a bias.
struct LinearParams {
  const Schema* schema = nullptr;
  std::vector<Tensor*> w_fields;  // cat: [cardinality]; num: [1]
  Tensor* bias = nullptr;         // [1]

  // Registers `<prefix>w.cat.<id>` / `<prefix>w.num.<id>` / `<prefix>b`,
  // all zero-initialized.
  static LinearParams create(ParamStore& store, const Schema& schema, const std::string& prefix);
};

// bias + sum of active categorical weights + sum_j w_j * x_j.
double lr_forward(const Instance& inst, const LinearParams& linear);

// Sum over all field subsets of size [min_order, max_order] of the
// element-wise-product-then-sum of their embedding rows, enumerated brute
// force in lexicographic subset order. When op_count is given it is
// incremented by k for every subset visited, so the total equals
// sum_{r} C(m,r) * k. Intended for m <= 12.
double cross_term(const Mat& embeds, int min_order, int max_order,
                  std::uint64_t* op_count = nullptr);

// lr_forward + sum_{j2>j1} <e_j1, e_j2> over the m field embeddings.
double fm_forward(const Instance& inst, const LinearParams& linear,
                  const EmbeddingTables& tables);

// lr_forward + cross_term over subsets of size 2..max_order, shared
// embeddings across orders. Requires 2 <= max_order <= m.
double hofm_forward(const Instance& inst, const LinearParams& linear,
                    const EmbeddingTables& tables, int max_order);

class LrModel : public Model {
 public:
  LrModel(Schema schema, ModelConfig config, std::uint64_t seed);
  ModelKind kind() const override { return ModelKind::kLr; }
  std::vector<double> forward_batch(const Dataset& ds, std::span<const int> rows,
                                    Mode mode) override;
  double forward_backward(const Dataset& ds, std::span<const int> rows) override;
  const LinearParams& linear() const { return linear_; }

 private:
  LinearParams linear_;
};

class FmModel : public Model {
 public:
  FmModel(Schema schema, ModelConfig config, std::uint64_t seed);
  ModelKind kind() const override { return ModelKind::kFm; }
  std::vector<double> forward_batch(const Dataset& ds, std::span<const int> rows,
                                    Mode mode) override;
  double forward_backward(const Dataset& ds, std::span<const int> rows) override;
  const LinearParams& linear() const { return linear_; }
  const EmbeddingTables& tables() const { return tables_; }

 private:
  LinearParams linear_;
  EmbeddingTables tables_;
};

class HofmModel : public Model {
 public:
  HofmModel(Schema schema, ModelConfig config, std::uint64_t seed);
  ModelKind kind() const override { return ModelKind::kHofm; }
  std::vector<double> forward_batch(const Dataset& ds, std::span<const int> rows,
                                    Mode mode) override;
  double forward_backward(const Dataset& ds, std::span<const int> rows) override;

 private:
  LinearParams linear_;
  EmbeddingTables tables_;
};

// Plain DNN over the concatenated (unclamped) embeddings; the AFN+ ensemble
// counterpart.
class DnnModel : public Model {
 public:
  DnnModel(Schema schema, ModelConfig config, std::uint64_t seed);
  ModelKind kind() const override { return ModelKind::kDnn; }
  bool uses_batch_stats() const override { return config_.batch_norm; }
  std::vector<double> forward_batch(const Dataset& ds, std::span<const int> rows,
                                    Mode mode) override;
  double forward_backward(const Dataset& ds, std::span<const int> rows) override;

 private:
  struct Cache;
  void forward_impl(const Dataset& ds, std::span<const int> rows, Mode mode, Cache& c);

  EmbeddingTables tables_;
  MlpStack mlp_;
  PredictionHead head_;
};

}  // namespace afn
