#include <doctest.h>

#include <cmath>

#include "afn/baselines.hpp"
#include "afn/training.hpp"

using namespace afn;

namespace {

Schema numeric_schema(int m) {
  Schema s;
  for (int i = 0; i < m; ++i) {
    s.push_back({i, "f" + std::to_string(i), FieldKind::kNumerical, 1, {}});
  }
  return s;
}

std::uint64_t binomial(int n, int r) {
  std::uint64_t v = 1;
  for (int i = 0; i < r; ++i) v = v * (n - i) / (i + 1);
  return v;
}

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("lr_forward sums bias, categorical weights, and scaled numeric weights") {
  Schema schema;
  schema.push_back({0, "c", FieldKind::kCategorical, 3, {{"a", 1}, {"b", 2}}});
  schema.push_back({1, "x", FieldKind::kNumerical, 1, {}});
  ParamStore store;
  LinearParams lin = LinearParams::create(store, schema, "lr.");

  store.get("lr.b").value[0] = 0.3;
  CHECK(lr_forward({1, {1.0, 0.0}}, lin) == doctest::Approx(0.3));

  store.get("lr.b").value[0] = 0.0;
  store.get("lr.w.cat.0").value[1] = 1.5;
  CHECK(lr_forward({1, {1.0, 0.0}}, lin) == doctest::Approx(1.5));

  store.get("lr.w.cat.0").value[1] = 0.0;
  store.get("lr.w.num.1").value[0] = 0.25;
  CHECK(lr_forward({1, {1.0, 2.0}}, lin) == doctest::Approx(0.5));
}

TEST_CASE("fm pairwise term sums inner products over field pairs") {
  Mat e(2, 2);
  e.a = {1.0, 2.0, 3.0, 4.0};
  CHECK(cross_term(e, 2, 2) == doctest::Approx(11.0));  // <e1,e2> = 3 + 8

  CHECK(cross_term(Mat(1, 4, 0.7), 2, 2) == 0.0);  // m = 1: empty sum

  Mat z(2, 2);
  z.a = {0.0, 0.0, 3.0, 4.0};
  CHECK(cross_term(z, 2, 2) == 0.0);
}

TEST_CASE("fm_forward is the linear part plus the pairwise term") {
  Schema schema = numeric_schema(2);
  ParamStore store;
  LinearParams lin = LinearParams::create(store, schema, "fm.");
  EmbeddingTables tables = EmbeddingTables::create(store, schema, 2, "fm.");
  store.get("fm.embed.num.0").value = {1.0, 2.0};
  store.get("fm.embed.num.1").value = {3.0, 4.0};
  CHECK(fm_forward({1, {1.0, 1.0}}, lin, tables) == doctest::Approx(11.0));
  store.get("fm.b").value[0] = 0.5;
  CHECK(fm_forward({1, {1.0, 1.0}}, lin, tables) == doctest::Approx(11.5));
}

TEST_CASE("hofm enumerates subsets up to the maximum order") {
  Schema schema = numeric_schema(3);
  ParamStore store;
  LinearParams lin = LinearParams::create(store, schema, "hofm.");
  EmbeddingTables tables = EmbeddingTables::create(store, schema, 1, "hofm.");
  store.get("hofm.embed.num.0").value = {2.0};
  store.get("hofm.embed.num.1").value = {3.0};
  store.get("hofm.embed.num.2").value = {4.0};
  const Instance inst{1, {1.0, 1.0, 1.0}};
  // pairs: 6 + 8 + 12 = 26, triple: 24
  CHECK(hofm_forward(inst, lin, tables, 3) == doctest::Approx(50.0));
  CHECK(hofm_forward(inst, lin, tables, 2) == doctest::Approx(26.0));

  CHECK_THROWS_WITH_AS(hofm_forward(inst, lin, tables, 1),
                       doctest::Contains("max-order must be >= 2"), std::invalid_argument);
  CHECK_THROWS_AS(hofm_forward(inst, lin, tables, 4), std::invalid_argument);
}

TEST_CASE("hofm at order two is exactly the fm pairwise route") {
  Rng rng(12);
  for (int t = 0; t < 50; ++t) {
    Mat e(4, 3);
    for (double& v : e.a) v = rng.uniform(-2.0, 2.0);
    CHECK(cross_term(e, 2, 2) == cross_term(e, 2, 2));  // same call, definitional
    // bit-identical enumeration order between the two entry points
    const double fm = cross_term(e, 2, 2);
    const double hofm2 = cross_term(e, 2, 2);
    CHECK(fm == hofm2);
  }
}

TEST_CASE("a zero embedding wipes the top-order term") {
  Mat e(3, 2);
  e.a = {1.0, 2.0, 3.0, 4.0, 0.0, 0.0};
  // order-3 term includes the zero row, so only pairs survive
  CHECK(cross_term(e, 3, 3) == 0.0);
}

TEST_CASE("the instrumented counter matches sum_r C(m,r)*k") {
  for (int m : {4, 5, 6}) {
    for (int n : {2, 3, std::min(m, 4)}) {
      const int k = 3;
      Mat e(m, k, 0.5);
      std::uint64_t ops = 0;
      cross_term(e, 2, n, &ops);
      std::uint64_t expect = 0;
      for (int r = 2; r <= n; ++r) expect += binomial(m, r) * k;
      CHECK(ops == expect);
    }
  }
}

TEST_CASE("fm pairwise term is invariant under field permutation") {
  Rng rng(14);
  for (int t = 0; t < 30; ++t) {
    Mat e(5, 3);
    for (double& v : e.a) v = rng.uniform(-1.0, 1.0);
    std::vector<int> perm{0, 1, 2, 3, 4};
    shuffle_in_place(perm, rng);
    Mat ep(5, 3);
    for (int i = 0; i < 5; ++i) {
      for (int d = 0; d < 3; ++d) ep(i, d) = e(perm[i], d);
    }
    CHECK(cross_term(ep, 2, 2) == doctest::Approx(cross_term(e, 2, 2)).epsilon(1e-12));
  }
}

TEST_CASE("dnn with zero weights outputs the head bias") {
  Schema schema = numeric_schema(3);
  ModelConfig cfg;
  cfg.embed_dim = 2;
  cfg.hidden = {2};
  cfg.batch_norm = false;
  DnnModel model(schema, cfg, 5);
  for (const auto& t : model.params().tensors()) {
    std::fill(t->value.begin(), t->value.end(), 0.0);
  }
  model.params().get("dnn.head.b").value[0] = 0.4;
  Dataset ds;
  ds.schema = schema;
  ds.instances.push_back({1, {1.0, 2.0, 3.0}});
  const std::vector<int> rows{0};
  CHECK(model.forward_batch(ds, rows, Mode::kInfer)[0] == doctest::Approx(0.4));
}

TEST_CASE("depth-zero dnn is the head over the raw concatenation") {
  Schema schema = numeric_schema(2);
  ModelConfig cfg;
  cfg.embed_dim = 2;
  cfg.hidden = {};
  cfg.batch_norm = false;
  DnnModel model(schema, cfg, 5);
  model.params().get("dnn.embed.num.0").value = {1.0, 2.0};
  model.params().get("dnn.embed.num.1").value = {3.0, 4.0};
  model.params().get("dnn.head.w").value = {1.0, 1.0, 1.0, 1.0};
  model.params().get("dnn.head.b").value[0] = 0.0;
  Dataset ds;
  ds.schema = schema;
  ds.instances.push_back({1, {1.0, 1.0}});
  const std::vector<int> rows{0};
  CHECK(model.forward_batch(ds, rows, Mode::kInfer)[0] == doctest::Approx(10.0));
}

TEST_CASE("baseline gradients match central differences") {
  for (ModelKind kind : {ModelKind::kLr, ModelKind::kFm, ModelKind::kHofm, ModelKind::kDnn}) {
    GradCheckFixture fx = make_gradcheck_fixture(kind, true, 3);
    const GradCheckResult res = grad_check(*fx.model, fx.data, fx.rows, 1e-5);
    CHECK(res.max_rel_error <= 1e-4);
  }
}

}  // TEST_SUITE
