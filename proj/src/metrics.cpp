#include "auditbench/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "auditbench/rng.hpp"

namespace auditbench {

const char* metric_name(Metric m) {
  switch (m) {
    case Metric::SPD: return "SPD";
    case Metric::AOD: return "AOD";
    case Metric::EOD: return "EOD";
  }
  return "?";
}

std::optional<Metric> metric_from_name(std::string_view name) {
  if (name == "SPD") return Metric::SPD;
  if (name == "AOD") return Metric::AOD;
  if (name == "EOD") return Metric::EOD;
  return std::nullopt;
}

namespace {

struct GroupTally {
  double cells[2][4] = {{0, 0, 0, 0}, {0, 0, 0, 0}};  // [group][tp,fp,fn,tn]

  void add(uint8_t group, uint8_t y, uint8_t yhat, double w = 1.0) {
    size_t cell = y ? (yhat ? 0 : 2) : (yhat ? 1 : 3);
    cells[group][cell] += w;
  }

  GroupedConfusion to_grouped() const {
    GroupedConfusion g;
    g.privileged = {cells[0][0], cells[0][1], cells[0][2], cells[0][3]};
    g.underprivileged = {cells[1][0], cells[1][1], cells[1][2], cells[1][3]};
    return g;
  }
};

}  // namespace

GroupedConfusion confusion_by_group(const DataTable& table) {
  if (!table.has_predictions())
    fail(Errc::PredictionsAbsent, "confusion_by_group needs a filled yhat");
  GroupTally tally;
  size_t count[2] = {0, 0};
  for (size_t r = 0; r < table.n_rows(); ++r) {
    uint8_t g = static_cast<uint8_t>(table.group(r));
    tally.add(g, static_cast<uint8_t>(table.y(r)),
              static_cast<uint8_t>(table.yhat(r)));
    ++count[g];
  }
  if (count[0] == 0) fail(Errc::EmptyGroup, "no privileged rows");
  if (count[1] == 0) fail(Errc::EmptyGroup, "no underprivileged rows");
  return tally.to_grouped();
}

std::optional<double> try_parity_metric(const GroupedConfusion& grouped,
                                        Metric metric) {
  const ConfusionMatrix& u = grouped.underprivileged;
  const ConfusionMatrix& p = grouped.privileged;
  switch (metric) {
    case Metric::SPD: {
      double nu = u.total(), np = p.total();
      if (!(nu > 0.0) || !(np > 0.0)) return std::nullopt;
      return (u.tp + u.fp) / nu - (p.tp + p.fp) / np;
    }
    case Metric::EOD: {
      double du = u.tp + u.fn, dp = p.tp + p.fn;
      if (!(du > 0.0) || !(dp > 0.0)) return std::nullopt;
      return u.tp / du - p.tp / dp;
    }
    case Metric::AOD: {
      double tu = u.tp + u.fn, tp_ = p.tp + p.fn;
      double fu = u.fp + u.tn, fp_ = p.fp + p.tn;
      if (!(tu > 0.0) || !(tp_ > 0.0) || !(fu > 0.0) || !(fp_ > 0.0))
        return std::nullopt;
      double tpr_diff = u.tp / tu - p.tp / tp_;
      double fpr_diff = u.fp / fu - p.fp / fp_;
      return 0.5 * (fpr_diff + tpr_diff);
    }
  }
  return std::nullopt;
}

MetricEstimate parity_metric(const GroupedConfusion& grouped, Metric metric) {
  auto v = try_parity_metric(grouped, metric);
  if (!v)
    fail(Errc::UndefinedRate, std::string(metric_name(metric)) +
                                  " has a zero denominator on this sample");
  return MetricEstimate{metric, *v, std::nullopt};
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) fail(Errc::EmptyValues, "percentile of empty sample");
  std::sort(values.begin(), values.end());
  if (p <= 0.0) return values.front();
  if (p >= 1.0) return values.back();
  double h = p * static_cast<double>(values.size() - 1);
  size_t lo = static_cast<size_t>(h);
  size_t hi = std::min(lo + 1, values.size() - 1);
  double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

MultiBootstrap bootstrap_values(const DataTable& table,
                                std::span<const Metric> metrics, int B,
                                uint64_t seed) {
  if (table.n_rows() == 0) fail(Errc::EmptyTable, "bootstrap of empty table");
  if (!table.has_predictions())
    fail(Errc::PredictionsAbsent, "bootstrap needs a filled yhat");
  if (B <= 0) fail(Errc::ConfigError, "bootstrap B must be positive");

  size_t n = table.n_rows();
  const auto& group = table.group_raw();
  const auto& y = table.y_raw();
  const auto& yhat = table.yhat_raw();

  bool has_priv = false, has_under = false;
  for (uint8_t g : group) (g ? has_under : has_priv) = true;
  if (!has_priv || !has_under)
    fail(Errc::EmptyGroup, "bootstrap needs both groups present");

  MultiBootstrap out;
  for (Metric m : metrics) {
    out.values[m].reserve(static_cast<size_t>(B));
    out.dropped[m] = 0;
  }

  for (int b = 0; b < B; ++b) {
    Rng rng(derive_seed(seed, static_cast<uint64_t>(b), "resample"));
    GroupTally tally;
    for (size_t i = 0; i < n; ++i) {
      size_t r = static_cast<size_t>(rng.below(n));
      tally.add(group[r], y[r], yhat[r]);
    }
    GroupedConfusion grouped = tally.to_grouped();
    for (Metric m : metrics) {
      auto v = try_parity_metric(grouped, m);
      if (v) {
        out.values[m].push_back(*v);
      } else {
        ++out.dropped[m];
      }
    }
  }
  return out;
}

BootstrapResult bootstrap_ci(const DataTable& table, Metric metric, int B,
                             double level, uint64_t seed) {
  if (!(level > 0.0 && level < 1.0))
    fail(Errc::ConfigError, "confidence level must lie in (0,1)");
  const Metric metrics[] = {metric};
  MultiBootstrap mb = bootstrap_values(table, metrics, B, seed);

  BootstrapResult res;
  res.values = std::move(mb.values[metric]);
  res.n_dropped = mb.dropped[metric];
  if (res.n_dropped > static_cast<double>(B) * 0.2)
    fail(Errc::TooManyDegenerate,
         std::to_string(res.n_dropped) + " of " + std::to_string(B) +
             " resamples had undefined rates");

  res.estimate = parity_metric(confusion_by_group(table), metric);
  double alpha = 1.0 - level;
  Interval iv;
  iv.lower = percentile(res.values, alpha / 2.0);
  iv.upper = percentile(res.values, 1.0 - alpha / 2.0);
  iv.level = level;
  res.estimate.interval = iv;
  return res;
}

}  // namespace auditbench
