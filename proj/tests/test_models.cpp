#include "auditbench/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <doctest.h>

#include "auditbench/rng.hpp"
#include "test_support.hpp"

using namespace auditbench;
using namespace auditbench::testing;

namespace {

ModelSpec logistic_spec() {
  ModelSpec s;
  s.model_class = ModelClass::LogisticRegression;
  s.learning_rate = 1.0;
  s.epochs = 300;
  return s;
}

ModelSpec stumps_spec() {
  ModelSpec s;
  s.model_class = ModelClass::BoostedStumps;
  s.learning_rate = 0.3;
  s.n_stumps = 60;
  return s;
}

ModelSpec dp_spec(double epsilon, double l2 = 0.01) {
  ModelSpec s;
  s.model_class = ModelClass::DpLogisticRegression;
  s.learning_rate = 1.0;
  s.epochs = 150;
  s.l2 = l2;
  s.dp_epsilon = epsilon;
  return s;
}

// y = 1 iff x0 + x1 > 0, margin bounded away from 0.
DataTable separable_table(size_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> rows;
  std::vector<uint8_t> group, y;
  while (rows.size() < n) {
    double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
    if (std::abs(a + b) < 0.2) continue;
    rows.push_back({a, b});
    group.push_back(rng.bernoulli(0.5));
    y.push_back(a + b > 0);
  }
  return make_table(rows, group, y);
}

double accuracy(const TrainedModel& m, const DataTable& t) {
  DataTable p = predict(m, t);
  size_t hits = 0;
  for (size_t r = 0; r < p.n_rows(); ++r) hits += p.yhat(r) == p.y(r);
  return static_cast<double>(hits) / static_cast<double>(p.n_rows());
}

}  // namespace

TEST_CASE("logistic regression separates a separable table perfectly") {
  DataTable t = separable_table(200, 5);
  TrainedModel m = train(logistic_spec(), t, 1);
  // Independent check of the construction itself: the oracle labels agree
  // with the sign of x0 + x1 on every row.
  for (size_t r = 0; r < t.n_rows(); ++r)
    CHECK(t.y(r) == (t.cell(r, 0) + t.cell(r, 1) > 0 ? 1 : 0));
  CHECK(accuracy(m, t) == 1.0);
}

TEST_CASE("single-class training yields a flagged constant model") {
  DataTable t = make_table({{1.0}, {2.0}, {3.0}}, {0, 1, 0}, {1, 1, 1});
  TrainedModel m = train(logistic_spec(), t, 1);
  CHECK(m.degenerate);
  CHECK(m.degenerate_label == 1);
  DataTable p = predict(m, t);
  for (size_t r = 0; r < p.n_rows(); ++r) CHECK(p.yhat(r) == 1);
}

TEST_CASE("training is deterministic") {
  DataTable t = separable_table(150, 8);
  TrainedModel a = train(logistic_spec(), t, 3);
  TrainedModel b = train(logistic_spec(), t, 3);
  CHECK(a.weights == b.weights);
  CHECK(a.intercept == b.intercept);

  ModelSpec dp = dp_spec(1.0);
  TrainedModel c = train(dp, t, 3);
  TrainedModel d = train(dp, t, 3);
  CHECK(c.weights == d.weights);
  TrainedModel e = train(dp, t, 4);
  CHECK(c.weights != e.weights);
}

TEST_CASE("missing features at predict time are mean-imputed") {
  DataTable t = separable_table(200, 11);
  TrainedModel m = train(logistic_spec(), t, 1);

  // Drop f0 from the table entirely: predictions must equal those from the
  // same table with f0 replaced by its training mean.
  DataTable without = t.without_feature_columns({0});
  std::vector<double> p_dropped = predict_proba(m, without);

  double mean0 = m.encoder.numeric_impute[0];
  std::vector<std::vector<double>> rows;
  for (size_t r = 0; r < t.n_rows(); ++r)
    rows.push_back({mean0, t.cell(r, 1)});
  DataTable imputed = make_table(rows, t.group_raw(), t.y_raw());
  std::vector<double> p_imputed = predict_proba(m, imputed);

  for (size_t r = 0; r < t.n_rows(); ++r)
    CHECK(p_dropped[r] == doctest::Approx(p_imputed[r]).epsilon(1e-12));
}

TEST_CASE("an all-imputed table yields one constant prediction") {
  DataTable t = separable_table(100, 12);
  TrainedModel m = train(logistic_spec(), t, 1);
  DataTable empty = t.without_feature_columns({0, 1});
  DataTable p = predict(m, empty);
  for (size_t r = 1; r < p.n_rows(); ++r) CHECK(p.yhat(r) == p.yhat(0));
}

TEST_CASE("duplicated rows receive identical predictions") {
  DataTable t = separable_table(60, 13);
  std::vector<size_t> doubled;
  for (size_t r = 0; r < t.n_rows(); ++r) {
    doubled.push_back(r);
    doubled.push_back(r);
  }
  DataTable dup = t.select_rows(doubled);
  TrainedModel m = train(stumps_spec(), t, 1);
  DataTable p = predict(m, dup);
  for (size_t r = 0; r < p.n_rows(); r += 2) CHECK(p.yhat(r) == p.yhat(r + 1));
}

TEST_CASE("logistic training loss is non-increasing") {
  // Larger-than-sane learning rate exercises the halving guard.
  for (double lr : {0.5, 4.0, 50.0}) {
    ModelSpec spec = logistic_spec();
    spec.learning_rate = lr;
    spec.epochs = 120;
    DataTable t = separable_table(130, 21);
    TrainedModel m = train(spec, t, 1);
    REQUIRE(!m.train_loss_curve.empty());
    for (size_t i = 1; i < m.train_loss_curve.size(); ++i)
      CHECK(m.train_loss_curve[i] <= m.train_loss_curve[i - 1] + 1e-9);
  }
}

TEST_CASE("one-hot encoding matches the category inventory") {
  // Two categorical features with 3 and 2 observed levels plus one numeric.
  Schema schema;
  schema.features = {{"num", FeatureKind::Numeric},
                     {"color", FeatureKind::Categorical},
                     {"flag", FeatureKind::Categorical}};
  schema.group_column = "group";
  schema.target_column = "y";
  schema.privileged_value = "privileged";
  schema.underprivileged_value = "underprivileged";

  std::vector<std::string> colors = {"red", "green", "blue"};
  std::vector<std::string> flags = {"on", "off"};
  std::vector<std::vector<double>> cols(3);
  std::vector<uint8_t> group, y;
  Rng rng(31);
  for (int i = 0; i < 60; ++i) {
    cols[0].push_back(rng.normal());
    cols[1].push_back(static_cast<double>(rng.below(3)));
    cols[2].push_back(static_cast<double>(rng.below(2)));
    group.push_back(rng.bernoulli(0.5));
    y.push_back(rng.bernoulli(0.5));
  }
  DataTable t = DataTable::from_parts(schema, cols, {{}, colors, flags}, group,
                                      y, {});
  TrainedModel m = train(logistic_spec(), t, 1);
  CHECK(m.encoder.encoded_width() == 1 + 3 + 2);
  CHECK(m.weights.size() == 6);

  // Unseen category at predict time maps to all-zeros rather than crashing.
  std::vector<std::vector<double>> cols2 = {{0.5}, {0.0}, {0.0}};
  DataTable t2 = DataTable::from_parts(
      schema, cols2, {{}, {"purple"}, {"on"}}, {0}, {0}, {});
  std::vector<int> map = m.encoder.map_columns(t2);
  std::vector<double> encoded;
  m.encoder.encode_row(t2, 0, map, encoded);
  CHECK(encoded[1] == 0.0);  // no color slot fires for "purple"
  CHECK(encoded[2] == 0.0);
  CHECK(encoded[3] == 0.0);
  // "on" is a training category; its slot position follows training
  // first-appearance order.
  const auto& flag_cats = m.encoder.categories[2];
  size_t on_slot = 4 + static_cast<size_t>(
                           std::find(flag_cats.begin(), flag_cats.end(), "on") -
                           flag_cats.begin());
  CHECK(encoded[on_slot] == 1.0);
}

TEST_CASE("dp training converges to the clean fit as epsilon grows") {
  DataTable t = separable_table(400, 41);
  ModelSpec clean_spec = logistic_spec();
  clean_spec.l2 = 0.01;
  clean_spec.epochs = 150;

  // The clean reference uses the same scaled pipeline: epsilon so large the
  // noise is negligible.
  TrainedModel nearly_clean = train(dp_spec(1e12), t, 7);
  TrainedModel noisy = train(dp_spec(1e9), t, 7);
  REQUIRE(noisy.weights.size() == nearly_clean.weights.size());
  for (size_t j = 0; j < noisy.weights.size(); ++j)
    CHECK(std::abs(noisy.weights[j] - nearly_clean.weights[j]) < 1e-3);
  CHECK(std::abs(noisy.intercept - nearly_clean.intercept) < 1e-3);
}

TEST_CASE("dp noise decays monotonically in epsilon") {
  DataTable t = separable_table(300, 43);
  TrainedModel clean = train(dp_spec(1e14), t, 0);

  std::vector<double> mean_max_dev;
  for (double eps = 1e3; eps <= 1e9 + 1; eps *= 10) {
    double total = 0;
    const int draws = 200;
    for (int d = 0; d < draws; ++d) {
      TrainedModel noisy = train(dp_spec(eps), t, 1000 + static_cast<uint64_t>(d));
      double worst = std::abs(noisy.intercept - clean.intercept);
      for (size_t j = 0; j < noisy.weights.size(); ++j)
        worst = std::max(worst, std::abs(noisy.weights[j] - clean.weights[j]));
      total += worst;
    }
    mean_max_dev.push_back(total / draws);
  }
  for (size_t i = 1; i < mean_max_dev.size(); ++i)
    CHECK(mean_max_dev[i] <= mean_max_dev[i - 1]);
}

TEST_CASE("stronger privacy costs accuracy on benchmark data") {
  BenchmarkSpec spec;
  spec.n_rows = 600;
  spec.n_numeric_features = 3;
  spec.signal_strength = 2.0;
  spec.base_rate_privileged = 0.4;
  spec.base_rate_underprivileged = 0.4;

  double acc_tight = 0, acc_loose = 0;
  const int seeds = 100;
  for (uint64_t s = 0; s < seeds; ++s) {
    spec.seed = s;
    DataTable full = generate_benchmark(spec);
    auto [train_tbl, test_tbl] = split(full, {0.7, s});
    acc_tight += accuracy(train(dp_spec(0.1, 0.02), train_tbl, s), test_tbl);
    acc_loose += accuracy(train(dp_spec(10.0, 0.02), train_tbl, s), test_tbl);
  }
  CHECK(acc_tight / seeds <= acc_loose / seeds);
}

TEST_CASE("dp training requires positive l2") {
  DataTable t = separable_table(100, 51);
  ModelSpec bad = dp_spec(1.0, 0.0);
  try {
    train(bad, t, 1);
    FAIL("expected NonPositiveL2");
  } catch (const AuditError& e) {
    CHECK(e.code() == Errc::NonPositiveL2);
  }
}

TEST_CASE("model spec validates dp_epsilon presence") {
  ModelSpec s = logistic_spec();
  s.dp_epsilon = 1.0;
  CHECK_THROWS_AS(s.validate(), AuditError);
  ModelSpec d = dp_spec(1.0);
  d.dp_epsilon.reset();
  CHECK_THROWS_AS(d.validate(), AuditError);
}

TEST_CASE("permutation importance ranks a copied label above noise") {
  int correct = 0;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(900 + seed);
    std::vector<std::vector<double>> rows;
    std::vector<uint8_t> group, y;
    for (int i = 0; i < 120; ++i) {
      int label = rng.bernoulli(0.5);
      rows.push_back({static_cast<double>(label), rng.normal()});
      group.push_back(rng.bernoulli(0.5));
      y.push_back(static_cast<uint8_t>(label));
    }
    DataTable t = make_table(rows, group, y);
    TrainedModel m = train(logistic_spec(), t, seed);
    ImportanceRanking r = feature_importance(m, t, seed);
    REQUIRE(r.entries.size() == 2);
    // Ascending order: the strong predictor f0 must come last.
    if (r.entries.back().first == "f0") ++correct;
  }
  CHECK(correct == 50);
}

TEST_CASE("permuting a constant column has zero importance") {
  std::vector<std::vector<double>> rows;
  std::vector<uint8_t> group, y;
  Rng rng(77);
  for (int i = 0; i < 80; ++i) {
    int label = rng.bernoulli(0.5);
    rows.push_back({3.25, static_cast<double>(label)});
    group.push_back(rng.bernoulli(0.5));
    y.push_back(static_cast<uint8_t>(label));
  }
  DataTable t = make_table(rows, group, y);
  TrainedModel m = train(logistic_spec(), t, 1);
  ImportanceRanking r = feature_importance(m, t, 5);
  for (const auto& [name, score] : r.entries) {
    if (name == "f0") CHECK(score == 0.0);
    CHECK(score >= 0.0);
  }
}

TEST_CASE("importance is deterministic and needs 20 rows") {
  DataTable t = separable_table(50, 61);
  TrainedModel m = train(logistic_spec(), t, 1);
  ImportanceRanking a = feature_importance(m, t, 9);
  ImportanceRanking b = feature_importance(m, t, 9);
  CHECK(a.entries == b.entries);

  DataTable tiny = separable_table(10, 62);
  try {
    feature_importance(m, tiny, 9);
    FAIL("expected TooFewRows");
  } catch (const AuditError& e) {
    CHECK(e.code() == Errc::TooFewRows);
  }
}

TEST_CASE("boosted stumps capture a non-linear signal logistic misses") {
  // y depends on |x0|, invisible to a linear score.
  Rng rng(71);
  std::vector<std::vector<double>> rows;
  std::vector<uint8_t> group, y;
  for (int i = 0; i < 500; ++i) {
    double x = rng.normal();
    rows.push_back({x});
    group.push_back(rng.bernoulli(0.5));
    y.push_back(rng.bernoulli(std::abs(x) > 0.67 ? 0.95 : 0.05));
  }
  DataTable t = make_table(rows, group, y);
  double acc_stumps = accuracy(train(stumps_spec(), t, 1), t);
  double acc_logistic = accuracy(train(logistic_spec(), t, 1), t);
  CHECK(acc_stumps > 0.85);
  CHECK(acc_logistic < 0.70);
}

TEST_CASE("model serialization round-trips predictions") {
  BenchmarkSpec spec;
  spec.n_rows = 300;
  spec.n_numeric_features = 3;
  spec.n_categorical_features = 1;
  spec.signal_strength = 1.5;
  spec.seed = 5;
  DataTable t = generate_benchmark(spec);

  for (ModelSpec ms : {logistic_spec(), stumps_spec(), dp_spec(10.0)}) {
    TrainedModel m = train(ms, t, 3);
    TempDir dir("model_io");
    save_model(m, dir.file("model.json"));
    TrainedModel loaded = load_model(dir.file("model.json"));
    std::vector<double> a = predict_proba(m, t);
    std::vector<double> b = predict_proba(loaded, t);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i)
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }
}
