#pragma once

#include <string>
#include <utility>
#include <vector>

#include "afn/mat.hpp"

namespace afn {

// One training snapshot of the logarithmic layer: the optimizer step it was
// taken at plus the raw m x N coefficient matrix.
struct OrderSnapshot {
  long step = 0;
  Mat weights;
};

struct NeuronOrderRow {
  long step;
  int neuron;
  double order;
};

struct WeightRow {
  long step;
  int field;
  int neuron;
  double weight;
};

// Per snapshot: cross_feature_order per neuron and the raw signed weights.
// Throws if snapshots disagree on (m, N).
std::vector<NeuronOrderRow> snapshot_orders(const std::vector<OrderSnapshot>& snaps);
std::vector<WeightRow> snapshot_weights(const std::vector<OrderSnapshot>& snaps);

void write_orders_csv(const std::string& path, const std::vector<NeuronOrderRow>& rows);
void write_weights_csv(const std::string& path, const std::vector<WeightRow>& rows);

struct CaseStudyRow {
  int neuron;
  int rank;  // 1-based within the neuron
  int field;
  std::string field_name;
  double abs_weight;
};

struct CaseStudy {
  std::vector<CaseStudyRow> rows;                         // per neuron, ranked
  std::vector<std::pair<std::string, double>> field_sums; // field order, name -> sum_j |w_ij|
};

// For each neuron, fields sorted by |w_ij| descending (ties broken by
// ascending field_id) cut to top_k; plus per-field order sums. Depends only
// on |w|, so it is invariant under sign flips.
CaseStudy case_study(const Mat& w, const std::vector<std::string>& field_names, int top_k);

void write_case_study_csv(const std::string& path, const CaseStudy& cs);
void write_field_sums_csv(const std::string& path, const CaseStudy& cs);

}  // namespace afn
