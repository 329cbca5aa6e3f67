#include "afn/embedding.hpp"

#include <cmath>
#include <stdexcept>

namespace afn {

EmbeddingTables EmbeddingTables::create(ParamStore& store, const Schema& schema, int embed_dim,
                                        const std::string& prefix) {
  if (embed_dim < 1) throw std::invalid_argument("embed_dim must be >= 1");
  EmbeddingTables t;
  t.schema = &schema;
  t.embed_dim = embed_dim;
  const auto k = static_cast<std::size_t>(embed_dim);
  for (const FieldSchema& f : schema) {
    const std::string id = std::to_string(f.field_id);
    if (f.kind == FieldKind::kCategorical) {
      t.fields.push_back(
          &store.add(prefix + "embed.cat." + id, {static_cast<std::size_t>(f.cardinality), k}));
    } else {
      t.fields.push_back(&store.add(prefix + "embed.num." + id, {k}));
    }
  }
  return t;
}

void init_embeddings(EmbeddingTables& tables, Rng& rng, double scale) {
  const double bound = 0.01 * scale;
  for (Tensor* t : tables.fields) {
    for (double& v : t->value) v = rng.uniform(-bound, bound);
  }
}

void embed_row(const Instance& inst, const EmbeddingTables& tables, double* out) {
  const Schema& schema = *tables.schema;
  const std::size_t k = static_cast<std::size_t>(tables.embed_dim);
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const Tensor& t = *tables.fields[i];
    double* dst = out + i * k;
    if (schema[i].kind == FieldKind::kCategorical) {
      const auto idx = static_cast<long>(inst.values[i]);
      if (idx < 0 || idx >= static_cast<long>(t.rows())) {
        throw std::invalid_argument("embed: category index out of range for field '" +
                                    schema[i].name + "'");
      }
      const double* src = t.value.data() + static_cast<std::size_t>(idx) * k;
      for (std::size_t d = 0; d < k; ++d) dst[d] = src[d];
    } else {
      const double x = inst.values[i];
      for (std::size_t d = 0; d < k; ++d) dst[d] = t.value[d] * x;
    }
  }
}

Mat embed(const Instance& inst, const EmbeddingTables& tables) {
  Mat e(tables.schema->size(), static_cast<std::size_t>(tables.embed_dim));
  embed_row(inst, tables, e.a.data());
  return e;
}

Mat positive_clamp(const Mat& e, double epsilon) {
  if (epsilon <= 0) throw std::invalid_argument("positive_clamp: epsilon must be > 0");
  Mat out(e.rows, e.cols);
  for (std::size_t i = 0; i < e.size(); ++i) {
    out.a[i] = std::max(std::abs(e.a[i]), epsilon);
  }
  return out;
}

Mat positive_clamp_sign(const Mat& e, double epsilon) {
  Mat out(e.rows, e.cols);
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double v = e.a[i];
    out.a[i] = std::abs(v) > epsilon ? (v > 0 ? 1.0 : -1.0) : 0.0;
  }
  return out;
}

void embed_backward(const Instance& inst, const Mat& upstream, double epsilon,
                    EmbeddingTables& tables) {
  const Schema& schema = *tables.schema;
  const std::size_t k = static_cast<std::size_t>(tables.embed_dim);
  if (upstream.rows != schema.size() || upstream.cols != k) {
    throw std::invalid_argument("embed_backward: upstream gradient shape mismatch");
  }
  for (std::size_t i = 0; i < schema.size(); ++i) {
    Tensor& t = *tables.fields[i];
    const double* up = upstream.row(i);
    if (schema[i].kind == FieldKind::kCategorical) {
      const auto idx = static_cast<std::size_t>(inst.values[i]);
      const double* src = t.value.data() + idx * k;
      double* g = t.grad.data() + idx * k;
      for (std::size_t d = 0; d < k; ++d) {
        const double e = src[d];
        const double s = std::abs(e) > epsilon ? (e > 0 ? 1.0 : -1.0) : 0.0;
        g[d] += up[d] * s;
      }
    } else {
      const double x = inst.values[i];
      for (std::size_t d = 0; d < k; ++d) {
        const double e = t.value[d] * x;
        const double s = std::abs(e) > epsilon ? (e > 0 ? 1.0 : -1.0) : 0.0;
        t.grad[d] += up[d] * s * x;
      }
    }
  }
}

}  // namespace afn
