#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "afn/analysis.hpp"
#include "afn/logtransform.hpp"
#include "afn/rng.hpp"

using namespace afn;

namespace {

Mat known_w() {
  // 2 fields x 3 neurons
  Mat w(2, 3);
  w.a = {0.5, -1.0, 0.25,
         2.0, 0.0, -0.75};
  return w;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("snapshot_orders emits one order per neuron per snapshot") {
  std::vector<OrderSnapshot> snaps;
  snaps.push_back({10, Mat(2, 3, 0.0)});
  snaps.push_back({20, known_w()});
  const auto rows = snapshot_orders(snaps);
  REQUIRE(rows.size() == 6);
  for (int j = 0; j < 3; ++j) {
    CHECK(rows[j].step == 10);
    CHECK(rows[j].order == 0.0);
  }
  CHECK(rows[3].order == doctest::Approx(2.5));   // |0.5| + |2.0|
  CHECK(rows[4].order == doctest::Approx(1.0));
  CHECK(rows[5].order == doctest::Approx(1.0));
}

TEST_CASE("identical snapshots produce identical rows per step") {
  std::vector<OrderSnapshot> snaps;
  snaps.push_back({1, known_w()});
  snaps.push_back({2, known_w()});
  const auto rows = snapshot_orders(snaps);
  REQUIRE(rows.size() == 6);
  for (int j = 0; j < 3; ++j) CHECK(rows[j].order == rows[j + 3].order);
}

TEST_CASE("inconsistent shapes across snapshots are rejected") {
  std::vector<OrderSnapshot> snaps;
  snaps.push_back({1, Mat(2, 3, 0.0)});
  snaps.push_back({2, Mat(3, 3, 0.0)});
  CHECK_THROWS_AS(snapshot_orders(snaps), std::invalid_argument);
  CHECK_THROWS_AS(snapshot_weights(snaps), std::invalid_argument);
}

TEST_CASE("orders recomputed from emitted raw weights match emitted orders") {
  Rng rng(41);
  Mat w(5, 7);
  for (double& v : w.a) v = rng.uniform(-2.0, 2.0);
  std::vector<OrderSnapshot> snaps;
  snaps.push_back({123, w});
  const auto orders = snapshot_orders(snaps);
  const auto weights = snapshot_weights(snaps);

  Mat rebuilt(5, 7);
  for (const auto& r : weights) rebuilt(r.field, r.neuron) = r.weight;
  for (const auto& r : orders) {
    CHECK(std::abs(r.order - cross_feature_order(rebuilt, r.neuron)) <= 1e-12);
  }
}

TEST_CASE("case_study ranks fields by absolute weight with a top-k cut") {
  Mat w(3, 1);
  w.a = {0.9, -0.1, 0.05};
  const CaseStudy cs = case_study(w, {"a", "b", "c"}, 2);
  REQUIRE(cs.rows.size() == 2);
  CHECK(cs.rows[0].field == 0);
  CHECK(cs.rows[0].rank == 1);
  CHECK(cs.rows[0].abs_weight == doctest::Approx(0.9));
  CHECK(cs.rows[1].field == 1);
}

TEST_CASE("case_study breaks ties by ascending field id") {
  Mat w(3, 1, 0.4);
  const CaseStudy cs = case_study(w, {"a", "b", "c"}, 3);
  CHECK(cs.rows[0].field == 0);
  CHECK(cs.rows[1].field == 1);
  CHECK(cs.rows[2].field == 2);
}

TEST_CASE("case_study depends only on absolute weights") {
  Mat w = known_w();
  Mat flipped = w;
  for (double& v : flipped.a) v = -v;
  const CaseStudy a = case_study(w, {"a", "b"}, 2);
  const CaseStudy b = case_study(flipped, {"a", "b"}, 2);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].field == b.rows[i].field);
    CHECK(a.rows[i].abs_weight == b.rows[i].abs_weight);
  }
  for (std::size_t i = 0; i < a.field_sums.size(); ++i) {
    CHECK(a.field_sums[i].second == b.field_sums[i].second);
  }
}

TEST_CASE("per-field sums match hand arithmetic") {
  const CaseStudy cs = case_study(known_w(), {"a", "b"}, 1);
  CHECK(cs.field_sums[0].first == "a");
  CHECK(cs.field_sums[0].second == doctest::Approx(1.75));  // 0.5 + 1.0 + 0.25
  CHECK(cs.field_sums[1].second == doctest::Approx(2.75));  // 2.0 + 0.0 + 0.75
}

TEST_CASE("case_study validates its arguments") {
  CHECK_THROWS_AS(case_study(known_w(), {"one"}, 1), std::invalid_argument);
  CHECK_THROWS_AS(case_study(known_w(), {"a", "b"}, 0), std::invalid_argument);
}

}  // TEST_SUITE
