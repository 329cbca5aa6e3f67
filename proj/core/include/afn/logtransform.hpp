#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "afn/mat.hpp"

namespace afn {

// Saturation bound on the log-space sums before exponentiation. Outside the
// bound the forward value is pinned to exp(+/-kLtlSatLimit) with zero
// gradient.
inline constexpr double kLtlSatLimit = 30.0;

// Logarithmic transformation layer over positive embeddings. w is the m x N
// coefficient matrix; neuron j computes
//   y_j = exp(sum_i w(i,j) * ln e_i) = prod_i e_i^{w(i,j)}   (element-wise).
// Returns N x k; every entry strictly positive. Throws on a non-positive
// input entry.
Mat ltl_forward(const Mat& e_pos, const Mat& w);

struct LtlGrads {
  Mat w;  // m x N
  Mat e;  // m x k
};

// Reverse pass of ltl_forward. With L = ln e_pos and Y the forward output:
//   d/dw(i,j)  = sum_d up(j,d) * Y(j,d) * L(i,d)
//   d/de(i,d)  = sum_j up(j,d) * Y(j,d) * w(i,j) / e_pos(i,d)
LtlGrads ltl_backward(const Mat& e_pos, const Mat& w, const Mat& upstream);

// Order of the cross feature represented by neuron j: sum_i |w(i,j)|.
double cross_feature_order(const Mat& w, std::size_t neuron);

struct OrderProfile {
  Mat abs_weights;                 // m x N, |w(i,j)|
  std::vector<double> field_sums;  // per field: sum_j |w(i,j)|
};

OrderProfile field_order_profile(const Mat& w);

// CSV exports: `neuron_id,field_id,abs_weight` and `neuron_id,order`.
void write_profile_csvs(const Mat& w, const std::string& weights_path,
                        const std::string& orders_path);

}  // namespace afn
