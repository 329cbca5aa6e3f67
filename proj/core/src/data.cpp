#include "afn/data.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "afn/errors.hpp"
#include "afn/rng.hpp"
#include "afn/text.hpp"

namespace afn {

namespace {

std::string row_msg(std::size_t line_no, const std::string& what) {
  return "line " + std::to_string(line_no) + ": " + what;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

// Header: `label<TAB><name>:<C|N>...`. Returns the bare schema (no vocab).
Schema parse_header(const std::string& line, const std::string& path) {
  auto cols = split_tabs(line);
  if (cols.empty() || cols[0] != "label") {
    throw DataError(path + ": malformed header: first column must be 'label'");
  }
  if (cols.size() < 2) {
    throw DataError(path + ": malformed header: no feature fields declared");
  }
  Schema schema;
  for (std::size_t i = 1; i < cols.size(); ++i) {
    auto col = cols[i];
    std::size_t colon = col.rfind(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 2 != col.size()) {
      throw DataError(path + ": malformed header column '" + std::string(col) + "'");
    }
    FieldSchema f;
    f.field_id = static_cast<int>(i - 1);
    f.name = std::string(col.substr(0, colon));
    char kind = col[colon + 1];
    if (kind == 'C') {
      f.kind = FieldKind::kCategorical;
    } else if (kind == 'N') {
      f.kind = FieldKind::kNumerical;
    } else {
      throw DataError(path + ": unknown field kind '" + std::string(1, kind) + "' for field '" +
                      f.name + "'");
    }
    schema.push_back(std::move(f));
  }
  return schema;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  return in;
}

}  // namespace

bool schema_equal(const Schema& a, const Schema& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || a[i].kind != b[i].kind ||
        a[i].cardinality != b[i].cardinality || a[i].vocab != b[i].vocab) {
      return false;
    }
  }
  return true;
}

Schema fit_schema(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file, expected a header line");
  strip_cr(line);
  Schema schema = parse_header(line, path);

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() != schema.size() + 1) {
      throw DataError(path + ": " +
                      row_msg(line_no, "expected " + std::to_string(schema.size() + 1) +
                                           " columns, got " + std::to_string(cols.size())));
    }
    for (std::size_t i = 0; i < schema.size(); ++i) {
      auto tok = cols[i + 1];
      FieldSchema& f = schema[i];
      if (f.kind == FieldKind::kCategorical) {
        auto key = std::string(tok);
        if (f.vocab.find(key) == f.vocab.end()) {
          int next = static_cast<int>(f.vocab.size()) + 1;  // 0 is the OOV slot
          f.vocab.emplace(std::move(key), next);
        }
      } else {
        double x = 0.0;
        if (!parse_double(tok, x)) {
          throw DataError(path + ": " +
                          row_msg(line_no, "unparseable numeric token '" + std::string(tok) +
                                               "' in field '" + f.name + "'"));
        }
        if (!std::isfinite(x)) {
          throw DataError(path + ": " +
                          row_msg(line_no, "non-finite numeric value in field '" + f.name + "'"));
        }
      }
    }
  }
  for (FieldSchema& f : schema) {
    if (f.kind == FieldKind::kCategorical) {
      f.cardinality = 1 + static_cast<int>(f.vocab.size());
    }
  }
  return schema;
}

Dataset load_dataset(const std::string& path, const Schema& schema) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file, expected a header line");
  strip_cr(line);
  Schema header = parse_header(line, path);
  if (header.size() != schema.size()) {
    throw DataError(path + ": header declares " + std::to_string(header.size()) +
                    " fields, schema has " + std::to_string(schema.size()));
  }
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (header[i].name != schema[i].name || header[i].kind != schema[i].kind) {
      throw DataError(path + ": header field '" + header[i].name +
                      "' does not match schema field '" + schema[i].name + "'");
    }
  }

  Dataset ds;
  ds.schema = schema;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() != schema.size() + 1) {
      throw DataError(path + ": " +
                      row_msg(line_no, "expected " + std::to_string(schema.size() + 1) +
                                           " columns, got " + std::to_string(cols.size())));
    }
    Instance inst;
    long lbl = 0;
    if (!parse_int(cols[0], lbl) || (lbl != 0 && lbl != 1)) {
      throw DataError(path + ": " +
                      row_msg(line_no, "label must be 0 or 1 (got '" + std::string(cols[0]) + "')"));
    }
    inst.label = static_cast<int>(lbl);
    inst.values.resize(schema.size());
    for (std::size_t i = 0; i < schema.size(); ++i) {
      auto tok = cols[i + 1];
      const FieldSchema& f = schema[i];
      if (f.kind == FieldKind::kCategorical) {
        auto it = f.vocab.find(std::string(tok));
        inst.values[i] = it == f.vocab.end() ? 0.0 : static_cast<double>(it->second);
      } else {
        double x = 0.0;
        if (!parse_double(tok, x)) {
          throw DataError(path + ": " +
                          row_msg(line_no, "unparseable numeric token '" + std::string(tok) +
                                               "' in field '" + f.name + "'"));
        }
        if (!std::isfinite(x)) {
          throw DataError(path + ": " +
                          row_msg(line_no, "non-finite numeric value in field '" + f.name + "'"));
        }
        inst.values[i] = x;
      }
    }
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

void write_dataset_tsv(const std::string& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
  if (!out) throw DataError("cannot write file: " + path);
  out << "label";
  for (const FieldSchema& f : ds.schema) {
    out << '\t' << f.name << ':' << (f.kind == FieldKind::kCategorical ? 'C' : 'N');
  }
  out << '\n';
  // Reverse vocab lookup per categorical field.
  std::vector<std::vector<const std::string*>> rev(ds.schema.size());
  for (std::size_t i = 0; i < ds.schema.size(); ++i) {
    const FieldSchema& f = ds.schema[i];
    if (f.kind != FieldKind::kCategorical) continue;
    rev[i].assign(f.cardinality, nullptr);
    for (const auto& [tok, idx] : f.vocab) rev[i][idx] = &tok;
  }
  for (const Instance& inst : ds.instances) {
    out << inst.label;
    for (std::size_t i = 0; i < ds.schema.size(); ++i) {
      out << '\t';
      if (ds.schema[i].kind == FieldKind::kCategorical) {
        int idx = static_cast<int>(inst.values[i]);
        const std::string* tok = rev[i][idx];
        out << (tok != nullptr ? *tok : "<oov>");
      } else {
        out << fmt_double(inst.values[i]);
      }
    }
    out << '\n';
  }
}

std::array<Dataset, 3> split(const Dataset& ds, const SplitRatios& ratios, std::uint64_t seed) {
  if (ds.instances.empty()) throw std::invalid_argument("split: dataset is empty");
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0) {
    throw std::invalid_argument("split: ratios must be nonnegative");
  }
  if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split: ratios must sum to 1");
  }
  const std::size_t k = ds.size();
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(mix_seed(seed, kStreamSplit));
  shuffle_in_place(perm, rng);

  const std::size_t n_train = static_cast<std::size_t>(std::floor(k * ratios.train));
  const std::size_t n_val = static_cast<std::size_t>(std::floor(k * ratios.val));

  std::array<Dataset, 3> parts;
  for (Dataset& p : parts) p.schema = ds.schema;
  for (std::size_t i = 0; i < k; ++i) {
    const Instance& inst = ds.instances[perm[i]];
    if (i < n_train) {
      parts[0].instances.push_back(inst);
    } else if (i < n_train + n_val) {
      parts[1].instances.push_back(inst);
    } else {
      parts[2].instances.push_back(inst);
    }
  }
  return parts;
}

std::vector<std::vector<int>> make_batches(std::size_t n, int batch_size, bool shuffle,
                                           std::uint64_t seed, int epoch) {
  if (batch_size < 1) throw std::invalid_argument("make_batches: batch_size must be >= 1");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (shuffle) {
    Rng rng(mix_seed(mix_seed(seed, kStreamShuffle), static_cast<std::uint64_t>(epoch)));
    shuffle_in_place(order, rng);
  }
  std::vector<std::vector<int>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    std::size_t end = std::min(n, start + static_cast<std::size_t>(batch_size));
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

}  // namespace afn
