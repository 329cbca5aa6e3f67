#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace afn {

enum class FieldKind { kCategorical, kNumerical };

// One column of the input schema. Categorical fields carry a vocabulary
// mapping observed tokens to indices >= 1; index 0 is the reserved
// out-of-vocabulary slot, so cardinality = 1 + distinct observed tokens.
struct FieldSchema {
  int field_id = 0;
  std::string name;
  FieldKind kind = FieldKind::kCategorical;
  int cardinality = 1;                // categorical only
  std::map<std::string, int> vocab;   // categorical only; token -> index >= 1
};

using Schema = std::vector<FieldSchema>;

bool schema_equal(const Schema& a, const Schema& b);

// One labeled example. values[i] holds a vocabulary index for categorical
// fields (stored as a double, always integral and < cardinality) and the raw
// scalar x_j for numerical fields.
struct Instance {
  int label = 0;
  std::vector<double> values;
};

struct Dataset {
  Schema schema;
  std::vector<Instance> instances;

  std::size_t size() const { return instances.size(); }
};

// File format: UTF-8, LF, TAB-separated, header `label<TAB><name>:<C|N>...`.
// Builds categorical vocabularies from the observed tokens (first-seen
// order, indices from 1) and validates numeric tokens.
Schema fit_schema(const std::string& path);

// Parses a data file against an existing schema. Unseen categorical tokens
// map to index 0; labels must be 0 or 1; numeric values must be finite.
Dataset load_dataset(const std::string& path, const Schema& schema);

void write_dataset_tsv(const std::string& path, const Dataset& ds);

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

// Deterministic Fisher-Yates permutation keyed by the seed, then a
// (floor(K*r_train), floor(K*r_val), remainder) partition.
std::array<Dataset, 3> split(const Dataset& ds, const SplitRatios& ratios, std::uint64_t seed);

// Index batches for one epoch. Shuffle order is a deterministic function of
// (seed, epoch); the last batch may be smaller.
std::vector<std::vector<int>> make_batches(std::size_t n, int batch_size, bool shuffle,
                                           std::uint64_t seed, int epoch);

}  // namespace afn
