#include "afn/logtransform.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "afn/errors.hpp"
#include "afn/text.hpp"

namespace afn {

Mat ltl_forward(const Mat& e_pos, const Mat& w) {
  const std::size_t m = e_pos.rows;
  const std::size_t k = e_pos.cols;
  if (w.rows != m) throw std::invalid_argument("ltl_forward: weight rows must match field count");
  for (double v : e_pos.a) {
    if (!(v > 0.0)) throw std::invalid_argument("ltl_forward: input must be strictly positive");
  }
  const std::size_t n = w.cols;

  Mat ln_e(m, k);
  for (std::size_t i = 0; i < e_pos.size(); ++i) ln_e.a[i] = std::log(e_pos.a[i]);

  Mat y(n, k);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t d = 0; d < k; ++d) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += w(i, j) * ln_e(i, d);
      if (s > kLtlSatLimit) s = kLtlSatLimit;
      if (s < -kLtlSatLimit) s = -kLtlSatLimit;
      y(j, d) = std::exp(s);
    }
  }
  return y;
}

LtlGrads ltl_backward(const Mat& e_pos, const Mat& w, const Mat& upstream) {
  const std::size_t m = e_pos.rows;
  const std::size_t k = e_pos.cols;
  const std::size_t n = w.cols;
  if (w.rows != m || upstream.rows != n || upstream.cols != k) {
    throw std::invalid_argument("ltl_backward: shape mismatch");
  }

  Mat ln_e(m, k);
  for (std::size_t i = 0; i < e_pos.size(); ++i) ln_e.a[i] = std::log(e_pos.a[i]);

  // dY(j,d)/dS(j,d) = Y(j,d) inside the saturation range, 0 outside.
  Mat y_times_up(n, k);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t d = 0; d < k; ++d) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += w(i, j) * ln_e(i, d);
      const bool in_range = s >= -kLtlSatLimit && s <= kLtlSatLimit;
      const double sc = in_range ? s : (s > 0 ? kLtlSatLimit : -kLtlSatLimit);
      y_times_up(j, d) = in_range ? upstream(j, d) * std::exp(sc) : 0.0;
    }
  }

  LtlGrads g{Mat(m, n), Mat(m, k)};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t d = 0; d < k; ++d) acc += y_times_up(j, d) * ln_e(i, d);
      g.w(i, j) = acc;
    }
    for (std::size_t d = 0; d < k; ++d) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += y_times_up(j, d) * w(i, j);
      g.e(i, d) = acc / e_pos(i, d);
    }
  }
  return g;
}

double cross_feature_order(const Mat& w, std::size_t neuron) {
  if (neuron >= w.cols) throw std::invalid_argument("cross_feature_order: neuron index out of range");
  double s = 0.0;
  for (std::size_t i = 0; i < w.rows; ++i) s += std::abs(w(i, neuron));
  return s;
}

OrderProfile field_order_profile(const Mat& w) {
  OrderProfile p;
  p.abs_weights = Mat(w.rows, w.cols);
  p.field_sums.assign(w.rows, 0.0);
  for (std::size_t i = 0; i < w.rows; ++i) {
    for (std::size_t j = 0; j < w.cols; ++j) {
      const double a = std::abs(w(i, j));
      p.abs_weights(i, j) = a;
      p.field_sums[i] += a;
    }
  }
  return p;
}

void write_profile_csvs(const Mat& w, const std::string& weights_path,
                        const std::string& orders_path) {
  std::ofstream wf(weights_path, std::ios::binary);
  if (!wf) throw DataError("cannot write file: " + weights_path);
  wf << "neuron_id,field_id,abs_weight\n";
  for (std::size_t j = 0; j < w.cols; ++j) {
    for (std::size_t i = 0; i < w.rows; ++i) {
      wf << j << ',' << i << ',' << fmt_double(std::abs(w(i, j))) << '\n';
    }
  }
  std::ofstream of(orders_path, std::ios::binary);
  if (!of) throw DataError("cannot write file: " + orders_path);
  of << "neuron_id,order\n";
  for (std::size_t j = 0; j < w.cols; ++j) {
    of << j << ',' << fmt_double(cross_feature_order(w, j)) << '\n';
  }
}

}  // namespace afn
