#include "auditbench/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <doctest.h>

#include "auditbench/rng.hpp"
#include "test_support.hpp"

using namespace auditbench;
using namespace auditbench::testing;

namespace {

// A table with a row-id feature and a deterministic label pattern.
DataTable id_table(size_t n = 100) {
  std::vector<std::vector<double>> rows;
  std::vector<uint8_t> group, y, yhat;
  for (size_t i = 0; i < n; ++i) {
    rows.push_back({static_cast<double>(i), std::sin(static_cast<double>(i)),
                    std::cos(static_cast<double>(i))});
    group.push_back(i % 3 == 0);
    y.push_back(i % 2);
    yhat.push_back((i / 2) % 2);
  }
  return make_table(rows, group, y, yhat);
}

ImportanceRanking ranking_for(const DataTable& t,
                              const std::vector<double>& scores) {
  ImportanceRanking r;
  for (size_t i = 0; i < t.n_features(); ++i)
    r.entries.emplace_back(t.schema().features[i].name, scores[i]);
  std::stable_sort(r.entries.begin(), r.entries.end(),
                   [](const auto& a, const auto& b) { return a.second < b.second; });
  return r;
}

}  // namespace

TEST_CASE("subsample fraction 1 is the identity") {
  DataTable t = id_table();
  CHECK(subsample(t, 1.0, 9).identical_to(t));
}

TEST_CASE("subsample halves a 100-row table keeping source rows and order") {
  DataTable t = id_table();
  DataTable half = subsample(t, 0.5, 13);
  CHECK(half.n_rows() == 50);
  std::set<double> original;
  for (size_t r = 0; r < t.n_rows(); ++r) original.insert(t.cell(r, 0));
  for (size_t r = 0; r < half.n_rows(); ++r) {
    CHECK(original.count(half.cell(r, 0)) == 1);
    if (r > 0) CHECK(half.cell(r, 0) > half.cell(r - 1, 0));
  }
}

TEST_CASE("subsample that rounds to zero rows errors") {
  DataTable t = id_table();
  try {
    subsample(t, 0.001, 5);
    FAIL("expected EmptyResult");
  } catch (const AuditError& e) {
    CHECK(e.code() == Errc::EmptyResult);
  }
}

TEST_CASE("subsample preserves the y mean within binomial noise") {
  DataTable t = id_table(400);
  double full_mean = 0;
  for (size_t r = 0; r < t.n_rows(); ++r) full_mean += t.y(r);
  full_mean /= static_cast<double>(t.n_rows());

  const double fraction = 0.3;
  const size_t k = 120;
  double band = 3.0 * std::sqrt(full_mean * (1 - full_mean) / k);
  int inside = 0;
  const int draws = 500;
  for (int i = 0; i < draws; ++i) {
    DataTable s = subsample(t, fraction, static_cast<uint64_t>(i));
    double mean = 0;
    for (size_t r = 0; r < s.n_rows(); ++r) mean += s.y(r);
    mean /= static_cast<double>(s.n_rows());
    if (std::abs(mean - full_mean) <= band) ++inside;
  }
  // Without-replacement sampling is tighter than the binomial band.
  CHECK(inside >= draws * 99 / 100);
}

TEST_CASE("drop_weakest_features removes exactly the weakest k") {
  DataTable t = id_table();
  ImportanceRanking r = ranking_for(t, {0.5, 0.01, 0.2});  // weakest: f1, f2, f0

  CHECK(drop_weakest_features(t, 0, r).identical_to(t));

  DataTable d1 = drop_weakest_features(t, 1, r);
  REQUIRE(d1.n_features() == 2);
  CHECK(d1.schema().features[0].name == "f0");
  CHECK(d1.schema().features[1].name == "f2");

  DataTable d2 = drop_weakest_features(t, 2, r);
  REQUIRE(d2.n_features() == 1);
  CHECK(d2.schema().features[0].name == "f0");

  DataTable d3 = drop_weakest_features(t, 3, r);
  CHECK(d3.n_features() == 0);
  CHECK(d3.n_rows() == t.n_rows());
  CHECK(d3.has_predictions());
}

TEST_CASE("drop_weakest_features rejects a mismatched ranking") {
  DataTable t = id_table();
  ImportanceRanking r;
  r.entries = {{"nope", 0.1}, {"f0", 0.2}, {"f1", 0.3}};
  CHECK_THROWS_AS(drop_weakest_features(t, 1, r), AuditError);
  ImportanceRanking incomplete;
  incomplete.entries = {{"f0", 0.1}};
  CHECK_THROWS_AS(drop_weakest_features(t, 1, incomplete), AuditError);
}

TEST_CASE("inject_missingness hits exactly the computed cell count") {
  DataTable t = id_table(200);
  size_t n_under = 0;
  for (size_t r = 0; r < t.n_rows(); ++r)
    n_under += t.group(r) == Group::Underprivileged;
  ImportanceRanking rank = ranking_for(t, {0.3, 0.1, 0.5});  // top-2: f2, f0

  CHECK(inject_missingness(t, 0.0, rank, 2, 3).identical_to(t));

  const double rate = 0.2;
  DataTable out = inject_missingness(t, rate, rank, 2, 3);
  size_t expected = static_cast<size_t>(std::floor(rate * static_cast<double>(n_under)));
  for (size_t c : {size_t{0}, size_t{2}}) {
    size_t missing = 0;
    for (size_t r = 0; r < out.n_rows(); ++r) {
      if (out.is_missing(r, c)) {
        ++missing;
        CHECK(out.group(r) == Group::Underprivileged);
      }
    }
    CHECK(missing == expected);
  }
  // Untargeted feature untouched.
  for (size_t r = 0; r < out.n_rows(); ++r) CHECK_FALSE(out.is_missing(r, 1));
}

TEST_CASE("inject_missingness leaves the privileged submatrix bit-identical") {
  DataTable t = id_table(150);
  ImportanceRanking rank = ranking_for(t, {0.1, 0.2, 0.3});
  for (uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    DataTable out = inject_missingness(t, 0.6, rank, 3, seed);
    for (size_t r = 0; r < t.n_rows(); ++r) {
      if (t.group(r) != Group::Privileged) continue;
      for (size_t c = 0; c < t.n_features(); ++c) {
        CHECK_FALSE(out.is_missing(r, c));
        CHECK(out.cell(r, c) == t.cell(r, c));
      }
    }
  }
}

TEST_CASE("inject_missingness is deterministic under the seed") {
  DataTable t = id_table(150);
  ImportanceRanking rank = ranking_for(t, {0.1, 0.2, 0.3});
  CHECK(inject_missingness(t, 0.3, rank, 2, 9)
            .identical_to(inject_missingness(t, 0.3, rank, 2, 9)));
  CHECK_FALSE(inject_missingness(t, 0.3, rank, 2, 9)
                  .identical_to(inject_missingness(t, 0.3, rank, 2, 10)));
}

TEST_CASE("skew_disparity reassigns positives 95/5") {
  // 400 rows, 200 with a positive prediction.
  std::vector<std::vector<double>> rows;
  std::vector<uint8_t> group, y, yhat;
  for (int i = 0; i < 400; ++i) {
    rows.push_back({static_cast<double>(i)});
    group.push_back(i % 2);
    y.push_back((i / 4) % 2);
    yhat.push_back(i < 200);
  }
  DataTable t = make_table(rows, group, y, yhat);
  DataTable skewed = skew_disparity(t, 0.95, 31);

  size_t pos_under = 0, pos_priv = 0;
  for (size_t r = 0; r < skewed.n_rows(); ++r) {
    if (skewed.yhat(r) == 1) {
      ++(skewed.group(r) == Group::Underprivileged ? pos_under : pos_priv);
    } else {
      // Non-positives keep their original group.
      CHECK(skewed.group(r) == t.group(r));
    }
  }
  CHECK(pos_under == 190);
  CHECK(pos_priv == 10);

  // Only the group column changed.
  CHECK(skewed.y_raw() == t.y_raw());
  CHECK(skewed.yhat_raw() == t.yhat_raw());
  for (size_t r = 0; r < t.n_rows(); ++r)
    CHECK(skewed.cell(r, 0) == t.cell(r, 0));
  CHECK(skewed.n_rows() == t.n_rows());
}

TEST_CASE("skew_disparity handles a single positive prediction") {
  DataTable t = make_table({{0.0}, {1.0}, {2.0}}, {0, 0, 0}, {1, 0, 1},
                           {1, 0, 0});
  DataTable skewed = skew_disparity(t, 0.95, 4);
  // round(0.95 * 1) = 1: the lone positive row becomes underprivileged.
  CHECK(skewed.group(0) == Group::Underprivileged);
  CHECK(skewed.group(1) == Group::Privileged);
  CHECK(skewed.group(2) == Group::Privileged);
}

TEST_CASE("skew_disparity requires a positive prediction") {
  DataTable t = make_table({{0.0}, {1.0}}, {0, 1}, {1, 0}, {0, 0});
  try {
    skew_disparity(t, 0.95, 4);
    FAIL("expected NoPositivePredictions");
  } catch (const AuditError& e) {
    CHECK(e.code() == Errc::NoPositivePredictions);
  }
}

TEST_CASE("no-op degradations compose to the identity in any order") {
  DataTable t = id_table(60);
  ImportanceRanking rank = ranking_for(t, {0.1, 0.2, 0.3});
  DataTable a = subsample(drop_weakest_features(
                              inject_missingness(t, 0.0, rank, 3, 1), 0, rank),
                          1.0, 2);
  DataTable b = inject_missingness(
      drop_weakest_features(subsample(t, 1.0, 3), 0, rank), 0.0, rank, 3, 4);
  CHECK(a.identical_to(t));
  CHECK(b.identical_to(t));
}

TEST_CASE("degradation specs validate and label themselves") {
  DegradationSpec sub;
  sub.kind = DegradationSpec::Kind::Subsample;
  sub.fraction = 0.25;
  CHECK(sub.label() == "subsample=0.25");
  sub.fraction = 1.5;
  CHECK_THROWS_AS(sub.validate(), AuditError);

  DegradationSpec miss;
  miss.kind = DegradationSpec::Kind::DisparateMissingness;
  miss.rate = 0.61;
  CHECK_THROWS_AS(miss.validate(), AuditError);
  miss.rate = 0.05;
  CHECK(miss.label() == "missingness=0.05");

  DegradationSpec drop;
  drop.kind = DegradationSpec::Kind::DropWeakestFeatures;
  drop.drop_count = 7;
  CHECK(drop.label() == "features=7");
}
