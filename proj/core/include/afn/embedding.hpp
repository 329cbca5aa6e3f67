#pragma once

#include <string>
#include <vector>

#include "afn/data.hpp"
#include "afn/mat.hpp"
#include "afn/rng.hpp"
#include "afn/tensor.hpp"

namespace afn {

// Default floor for the positivity clamp in front of the logarithmic layer.
inline constexpr double kClampEpsilon = 1e-7;

// Per-field embedding tables: a [cardinality, k] matrix per categorical
// field, a [k] vector per numerical field.
struct EmbeddingTables {
  const Schema* schema = nullptr;
  int embed_dim = 0;
  std::vector<Tensor*> fields;  // in field_id order

  // Registers `<prefix>embed.cat.<id>` / `<prefix>embed.num.<id>` tensors.
  static EmbeddingTables create(ParamStore& store, const Schema& schema, int embed_dim,
                                const std::string& prefix = "");
};

// i.i.d. uniform in [-0.01*scale, 0.01*scale], drawn in field order.
void init_embeddings(EmbeddingTables& tables, Rng& rng, double scale = 1.0);

// Row i is V_i[index] for categorical fields and v_j * x_j for numerical
// fields. Throws std::invalid_argument on an out-of-range category index.
Mat embed(const Instance& inst, const EmbeddingTables& tables);
void embed_row(const Instance& inst, const EmbeddingTables& tables, double* out);

// out[i][d] = max(|e[i][d]|, epsilon): strictly positive everywhere.
Mat positive_clamp(const Mat& e, double epsilon = kClampEpsilon);

// Local derivative of positive_clamp: sign(e) where |e| > epsilon, else 0.
Mat positive_clamp_sign(const Mat& e, double epsilon = kClampEpsilon);

// Accumulates into tables' grads the gradient of the clamped embedding
// output: upstream is m x k, taken at the clamp output. Gradient reaches
// only the selected vocabulary row of each categorical field and v_j scaled
// by x_j for numerical fields; clamped coordinates pass zero.
void embed_backward(const Instance& inst, const Mat& upstream, double epsilon,
                    EmbeddingTables& tables);

}  // namespace afn
