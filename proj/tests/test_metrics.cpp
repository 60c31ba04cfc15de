#include "auditbench/metrics.hpp"

#include <cmath>
#include <numeric>

#include <doctest.h>

#include "auditbench/rng.hpp"
#include "test_support.hpp"

using namespace auditbench;
using namespace auditbench::testing;

namespace {

// Independent oracle: recomputes the three metrics straight from the rows
// with plain counters, sharing no code with the library path.
struct OracleRates {
  double pos_rate_u, pos_rate_p;
  double tpr_u, tpr_p, fpr_u, fpr_p;
  bool spd_ok, eod_ok, aod_ok;
};

OracleRates oracle_rates(const DataTable& t) {
  double n_u = 0, n_p = 0, pos_u = 0, pos_p = 0;
  double y1_u = 0, y1_p = 0, tp_u = 0, tp_p = 0;
  double y0_u = 0, y0_p = 0, fp_u = 0, fp_p = 0;
  for (size_t r = 0; r < t.n_rows(); ++r) {
    bool under = t.group(r) == Group::Underprivileged;
    double& n = under ? n_u : n_p;
    double& pos = under ? pos_u : pos_p;
    double& y1 = under ? y1_u : y1_p;
    double& tp = under ? tp_u : tp_p;
    double& y0 = under ? y0_u : y0_p;
    double& fp = under ? fp_u : fp_p;
    n += 1;
    if (t.yhat(r) == 1) pos += 1;
    if (t.y(r) == 1) {
      y1 += 1;
      if (t.yhat(r) == 1) tp += 1;
    } else {
      y0 += 1;
      if (t.yhat(r) == 1) fp += 1;
    }
  }
  OracleRates o{};
  o.spd_ok = n_u > 0 && n_p > 0;
  o.eod_ok = y1_u > 0 && y1_p > 0;
  o.aod_ok = o.eod_ok && y0_u > 0 && y0_p > 0;
  if (o.spd_ok) {
    o.pos_rate_u = pos_u / n_u;
    o.pos_rate_p = pos_p / n_p;
  }
  if (o.eod_ok) {
    o.tpr_u = tp_u / y1_u;
    o.tpr_p = tp_p / y1_p;
  }
  if (o.aod_ok) {
    o.fpr_u = fp_u / y0_u;
    o.fpr_p = fp_p / y0_p;
  }
  return o;
}

DataTable table_from_counts(const ConfusionMatrix& u,
                            const ConfusionMatrix& p) {
  std::vector<std::tuple<int, int, Group>> rows;
  auto push = [&](double count, int y, int yhat, Group g) {
    for (int i = 0; i < static_cast<int>(count); ++i) rows.push_back({y, yhat, g});
  };
  push(u.tp, 1, 1, Group::Underprivileged);
  push(u.fp, 0, 1, Group::Underprivileged);
  push(u.fn, 1, 0, Group::Underprivileged);
  push(u.tn, 0, 0, Group::Underprivileged);
  push(p.tp, 1, 1, Group::Privileged);
  push(p.fp, 0, 1, Group::Privileged);
  push(p.fn, 1, 0, Group::Privileged);
  push(p.tn, 0, 0, Group::Privileged);
  return label_table(rows);
}

}  // namespace

TEST_CASE("confusion_by_group tallies the documented 4-row example") {
  DataTable t = label_table({{1, 1, Group::Underprivileged},
                             {0, 0, Group::Underprivileged},
                             {1, 0, Group::Privileged},
                             {0, 1, Group::Privileged}});
  GroupedConfusion g = confusion_by_group(t);
  CHECK(g.underprivileged.tp == 1);
  CHECK(g.underprivileged.fp == 0);
  CHECK(g.underprivileged.fn == 0);
  CHECK(g.underprivileged.tn == 1);
  CHECK(g.privileged.tp == 0);
  CHECK(g.privileged.fp == 1);
  CHECK(g.privileged.fn == 1);
  CHECK(g.privileged.tn == 0);
}

TEST_CASE("confusion_by_group rejects one-group tables") {
  DataTable t = label_table({{1, 1, Group::Underprivileged},
                             {0, 0, Group::Underprivileged}});
  try {
    confusion_by_group(t);
    FAIL("expected EmptyGroup");
  } catch (const AuditError& e) {
    CHECK(e.code() == Errc::EmptyGroup);
  }
}

TEST_CASE("confusion_by_group matches an independent tally on random rows") {
  Rng rng(101);
  std::vector<std::tuple<int, int, Group>> rows;
  double expect[2][4] = {{0, 0, 0, 0}, {0, 0, 0, 0}};
  for (int i = 0; i < 10000; ++i) {
    int y = rng.bernoulli(0.42);
    int yhat = rng.bernoulli(0.58);
    int g = rng.bernoulli(0.37);
    rows.push_back({y, yhat, static_cast<Group>(g)});
    if (y == 1 && yhat == 1) expect[g][0] += 1;
    if (y == 0 && yhat == 1) expect[g][1] += 1;
    if (y == 1 && yhat == 0) expect[g][2] += 1;
    if (y == 0 && yhat == 0) expect[g][3] += 1;
  }
  GroupedConfusion g = confusion_by_group(label_table(rows));
  CHECK(g.privileged.tp == expect[0][0]);
  CHECK(g.privileged.fp == expect[0][1]);
  CHECK(g.privileged.fn == expect[0][2]);
  CHECK(g.privileged.tn == expect[0][3]);
  CHECK(g.underprivileged.tp == expect[1][0]);
  CHECK(g.underprivileged.fp == expect[1][1]);
  CHECK(g.underprivileged.fn == expect[1][2]);
  CHECK(g.underprivileged.tn == expect[1][3]);
}

TEST_CASE("parity metrics on the worked 200-row example") {
  // u:(tp40,fp10,fn10,tn40) p:(tp45,fp15,fn5,tn35):
  //   SPD = 50/100 - 60/100          = -0.10
  //   EOD = 40/50 - 45/50            = -0.10
  //   AOD = ((10/50-15/50)+(-0.10))/2 = -0.10
  ConfusionMatrix u{40, 10, 10, 40};
  ConfusionMatrix p{45, 15, 5, 35};
  GroupedConfusion g{u, p};
  CHECK(parity_metric(g, Metric::SPD).value == doctest::Approx(-0.10).epsilon(1e-12));
  CHECK(parity_metric(g, Metric::EOD).value == doctest::Approx(-0.10).epsilon(1e-12));
  CHECK(parity_metric(g, Metric::AOD).value == doctest::Approx(-0.10).epsilon(1e-12));

  // Cross-check through 200 synthetic rows realizing the same counts.
  DataTable t = table_from_counts(u, p);
  REQUIRE(t.n_rows() == 200);
  GroupedConfusion g2 = confusion_by_group(t);
  OracleRates o = oracle_rates(t);
  CHECK(parity_metric(g2, Metric::SPD).value ==
        doctest::Approx(o.pos_rate_u - o.pos_rate_p).epsilon(1e-12));
  CHECK(parity_metric(g2, Metric::EOD).value ==
        doctest::Approx(o.tpr_u - o.tpr_p).epsilon(1e-12));
  CHECK(parity_metric(g2, Metric::AOD).value ==
        doctest::Approx(0.5 * ((o.fpr_u - o.fpr_p) + (o.tpr_u - o.tpr_p)))
            .epsilon(1e-12));
}

TEST_CASE("identical group matrices give zero disparity") {
  ConfusionMatrix m{12, 3, 4, 9};
  GroupedConfusion g{m, m};
  CHECK(parity_metric(g, Metric::SPD).value == 0.0);
  CHECK(parity_metric(g, Metric::AOD).value == 0.0);
  CHECK(parity_metric(g, Metric::EOD).value == 0.0);
}

TEST_CASE("perfect predictor leaves only the base-rate gap in SPD") {
  // Base rates 0.5 vs 0.3 with fp=fn=0 force TPR=1, FPR=0 in both groups.
  ConfusionMatrix u{50, 0, 0, 50};
  ConfusionMatrix p{30, 0, 0, 70};
  GroupedConfusion g{u, p};
  CHECK(parity_metric(g, Metric::EOD).value == 0.0);
  CHECK(parity_metric(g, Metric::AOD).value == 0.0);
  CHECK(parity_metric(g, Metric::SPD).value == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("undefined rates surface as UndefinedRate") {
  // No positive ground truth in the underprivileged group: EOD undefined.
  ConfusionMatrix u{0, 10, 0, 40};
  ConfusionMatrix p{20, 10, 10, 10};
  GroupedConfusion g{u, p};
  CHECK(!try_parity_metric(g, Metric::EOD).has_value());
  CHECK(!try_parity_metric(g, Metric::AOD).has_value());
  CHECK(try_parity_metric(g, Metric::SPD).has_value());
  CHECK_THROWS_AS(parity_metric(g, Metric::EOD), AuditError);
}

TEST_CASE("group swap negates all three metrics") {
  Rng rng(55);
  for (int trial = 0; trial < 200; ++trial) {
    auto cell = [&] { return static_cast<double>(1 + rng.below(30)); };
    ConfusionMatrix u{cell(), cell(), cell(), cell()};
    ConfusionMatrix p{cell(), cell(), cell(), cell()};
    GroupedConfusion g{u, p};
    GroupedConfusion swapped{p, u};
    for (Metric m : {Metric::SPD, Metric::AOD, Metric::EOD}) {
      CHECK(parity_metric(g, m).value ==
            doctest::Approx(-parity_metric(swapped, m).value).epsilon(1e-12));
    }
  }
}

TEST_CASE("metrics are invariant to row order and row duplication") {
  Rng rng(66);
  std::vector<std::tuple<int, int, Group>> rows;
  for (int i = 0; i < 60; ++i)
    rows.push_back({static_cast<int>(rng.bernoulli(0.5)),
                    static_cast<int>(rng.bernoulli(0.4)),
                    static_cast<Group>(rng.bernoulli(0.5))});
  rows.push_back({1, 1, Group::Privileged});
  rows.push_back({1, 1, Group::Underprivileged});
  DataTable t = label_table(rows);

  std::vector<std::tuple<int, int, Group>> shuffled = rows;
  std::vector<size_t> perm(rows.size());
  std::iota(perm.begin(), perm.end(), size_t{0});
  shuffle(perm, rng);
  for (size_t i = 0; i < rows.size(); ++i) shuffled[i] = rows[perm[i]];

  std::vector<std::tuple<int, int, Group>> tripled;
  for (int k = 0; k < 3; ++k)
    tripled.insert(tripled.end(), rows.begin(), rows.end());

  GroupedConfusion base = confusion_by_group(t);
  GroupedConfusion shuf = confusion_by_group(label_table(shuffled));
  GroupedConfusion trip = confusion_by_group(label_table(tripled));
  for (Metric m : {Metric::SPD, Metric::AOD, Metric::EOD}) {
    double v = parity_metric(base, m).value;
    CHECK(parity_metric(shuf, m).value == doctest::Approx(v).epsilon(1e-12));
    CHECK(parity_metric(trip, m).value == doctest::Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("point metrics match the exhaustive oracle on tiny tables") {
  Rng rng(77);
  int compared = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    size_t n = 2 + rng.below(11);
    std::vector<std::tuple<int, int, Group>> rows;
    bool has_u = false, has_p = false;
    for (size_t i = 0; i < n; ++i) {
      Group g = static_cast<Group>(rng.bernoulli(0.5));
      (g == Group::Underprivileged ? has_u : has_p) = true;
      rows.push_back({static_cast<int>(rng.bernoulli(0.5)),
                      static_cast<int>(rng.bernoulli(0.5)), g});
    }
    if (!has_u || !has_p) continue;
    DataTable t = label_table(rows);
    GroupedConfusion g = confusion_by_group(t);
    OracleRates o = oracle_rates(t);

    auto spd = try_parity_metric(g, Metric::SPD);
    REQUIRE(spd.has_value() == o.spd_ok);
    if (spd) CHECK(*spd == doctest::Approx(o.pos_rate_u - o.pos_rate_p).epsilon(1e-12));

    auto eod = try_parity_metric(g, Metric::EOD);
    REQUIRE(eod.has_value() == o.eod_ok);
    if (eod) CHECK(*eod == doctest::Approx(o.tpr_u - o.tpr_p).epsilon(1e-12));

    auto aod = try_parity_metric(g, Metric::AOD);
    REQUIRE(aod.has_value() == o.aod_ok);
    if (aod)
      CHECK(*aod == doctest::Approx(0.5 * ((o.fpr_u - o.fpr_p) +
                                           (o.tpr_u - o.tpr_p))).epsilon(1e-12));
    ++compared;
  }
  CHECK(compared > 800);
}

TEST_CASE("bootstrap of a zero-variance table is a point mass") {
  std::vector<std::tuple<int, int, Group>> rows;
  for (int i = 0; i < 20; ++i) {
    rows.push_back({1, 1, Group::Underprivileged});
    rows.push_back({1, 1, Group::Privileged});
  }
  BootstrapResult res = bootstrap_ci(label_table(rows), Metric::SPD, 200, 0.95, 3);
  CHECK(res.estimate.value == 0.0);
  CHECK(res.estimate.interval->lower == 0.0);
  CHECK(res.estimate.interval->upper == 0.0);
  CHECK(res.n_dropped == 0);
}

TEST_CASE("bootstrap is deterministic under the seed") {
  Rng rng(88);
  std::vector<std::tuple<int, int, Group>> rows;
  for (int i = 0; i < 120; ++i)
    rows.push_back({static_cast<int>(rng.bernoulli(0.5)),
                    static_cast<int>(rng.bernoulli(0.45)),
                    static_cast<Group>(rng.bernoulli(0.5))});
  DataTable t = label_table(rows);
  BootstrapResult a = bootstrap_ci(t, Metric::SPD, 500, 0.95, 42);
  BootstrapResult b = bootstrap_ci(t, Metric::SPD, 500, 0.95, 42);
  CHECK(a.values == b.values);
  CHECK(a.estimate.interval->lower == b.estimate.interval->lower);
  BootstrapResult c = bootstrap_ci(t, Metric::SPD, 500, 0.95, 43);
  CHECK(a.values != c.values);
}

TEST_CASE("bootstrap aborts when too many resamples are degenerate") {
  // One underprivileged row in ten: a resample misses it with probability
  // (9/10)^10, about 0.35, far past the 20% threshold.
  std::vector<std::tuple<int, int, Group>> rows;
  rows.push_back({1, 1, Group::Underprivileged});
  for (int i = 0; i < 9; ++i) rows.push_back({i % 2, 1, Group::Privileged});
  try {
    bootstrap_ci(label_table(rows), Metric::SPD, 500, 0.95, 7);
    FAIL("expected TooManyDegenerate");
  } catch (const AuditError& e) {
    CHECK(e.code() == Errc::TooManyDegenerate);
  }
}

TEST_CASE("bootstrap interval width shrinks roughly as 1/sqrt(n)") {
  BenchmarkSpec spec;
  spec.n_rows = 1200;
  spec.n_numeric_features = 2;
  spec.signal_strength = 0.0;
  std::vector<double> ratios;
  for (uint64_t trial = 0; trial < 100; ++trial) {
    spec.seed = 1000 + trial;
    DataTable big = generate_benchmark(spec);
    // Predictions mirror y so rates are non-trivial.
    DataTable big_pred = big.with_predictions(big.y_raw());
    std::vector<size_t> head(300);
    std::iota(head.begin(), head.end(), size_t{0});
    DataTable small_pred = big_pred.select_rows(head);

    BootstrapResult wide = bootstrap_ci(small_pred, Metric::SPD, 300, 0.95, trial);
    BootstrapResult narrow = bootstrap_ci(big_pred, Metric::SPD, 300, 0.95, trial);
    ratios.push_back(narrow.estimate.interval->width() /
                     wide.estimate.interval->width());
  }
  double median = percentile(ratios, 0.5);
  CHECK(median > 0.35);
  CHECK(median < 0.65);
}

TEST_CASE("percentile interpolates between order statistics") {
  std::vector<double> v = {4.0, 1.0, 3.0, 2.0};
  CHECK(percentile(v, 0.0) == 1.0);
  CHECK(percentile(v, 1.0) == 4.0);
  CHECK(percentile(v, 0.5) == doctest::Approx(2.5));
  CHECK(percentile(v, 0.25) == doctest::Approx(1.75));
}
