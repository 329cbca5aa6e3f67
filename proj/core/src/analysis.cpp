#include "afn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "afn/errors.hpp"
#include "afn/logtransform.hpp"
#include "afn/text.hpp"

namespace afn {

namespace {

void check_shapes(const std::vector<OrderSnapshot>& snaps) {
  for (std::size_t i = 1; i < snaps.size(); ++i) {
    if (snaps[i].weights.rows != snaps[0].weights.rows ||
        snaps[i].weights.cols != snaps[0].weights.cols) {
      throw std::invalid_argument("snapshot_orders: inconsistent weight shapes across snapshots");
    }
  }
}

}  // namespace

std::vector<NeuronOrderRow> snapshot_orders(const std::vector<OrderSnapshot>& snaps) {
  check_shapes(snaps);
  std::vector<NeuronOrderRow> rows;
  for (const OrderSnapshot& s : snaps) {
    for (std::size_t j = 0; j < s.weights.cols; ++j) {
      rows.push_back({s.step, static_cast<int>(j), cross_feature_order(s.weights, j)});
    }
  }
  return rows;
}

std::vector<WeightRow> snapshot_weights(const std::vector<OrderSnapshot>& snaps) {
  check_shapes(snaps);
  std::vector<WeightRow> rows;
  for (const OrderSnapshot& s : snaps) {
    for (std::size_t i = 0; i < s.weights.rows; ++i) {
      for (std::size_t j = 0; j < s.weights.cols; ++j) {
        rows.push_back({s.step, static_cast<int>(i), static_cast<int>(j), s.weights(i, j)});
      }
    }
  }
  return rows;
}

void write_orders_csv(const std::string& path, const std::vector<NeuronOrderRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << "step,neuron_id,order\n";
  for (const auto& r : rows) {
    out << r.step << ',' << r.neuron << ',' << fmt_double(r.order) << '\n';
  }
}

void write_weights_csv(const std::string& path, const std::vector<WeightRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << "step,field_id,neuron_id,w\n";
  for (const auto& r : rows) {
    out << r.step << ',' << r.field << ',' << r.neuron << ',' << fmt_double(r.weight) << '\n';
  }
}

CaseStudy case_study(const Mat& w, const std::vector<std::string>& field_names, int top_k) {
  if (field_names.size() != w.rows) {
    throw std::invalid_argument("case_study: field name count does not match weight rows");
  }
  if (top_k < 1) throw std::invalid_argument("case_study: top_k must be >= 1");

  CaseStudy cs;
  const auto m = static_cast<int>(w.rows);
  const auto n = static_cast<int>(w.cols);
  std::vector<int> fields(m);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) fields[i] = i;
    std::stable_sort(fields.begin(), fields.end(), [&](int a, int b) {
      const double wa = std::abs(w(a, j));
      const double wb = std::abs(w(b, j));
      if (wa != wb) return wa > wb;
      return a < b;  // tie-break: ascending field_id
    });
    const int cut = std::min(top_k, m);
    for (int r = 0; r < cut; ++r) {
      const int f = fields[r];
      cs.rows.push_back({j, r + 1, f, field_names[f], std::abs(w(f, j))});
    }
  }
  const OrderProfile profile = field_order_profile(w);
  for (int i = 0; i < m; ++i) {
    cs.field_sums.emplace_back(field_names[i], profile.field_sums[i]);
  }
  return cs;
}

void write_case_study_csv(const std::string& path, const CaseStudy& cs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << "neuron_id,rank,field_name,abs_weight\n";
  for (const auto& r : cs.rows) {
    out << r.neuron << ',' << r.rank << ',' << r.field_name << ',' << fmt_double(r.abs_weight)
        << '\n';
  }
}

void write_field_sums_csv(const std::string& path, const CaseStudy& cs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << "field_name,total_abs_weight\n";
  for (const auto& [name, sum] : cs.field_sums) {
    out << name << ',' << fmt_double(sum) << '\n';
  }
}

}  // namespace afn
