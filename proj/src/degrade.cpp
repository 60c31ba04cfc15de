#include "auditbench/degrade.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "auditbench/rng.hpp"

namespace auditbench {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<size_t> ranked_columns(const DataTable& table,
                                   const ImportanceRanking& ranking) {
  std::vector<size_t> cols;
  cols.reserve(ranking.entries.size());
  for (const auto& [name, score] : ranking.entries) {
    auto idx = table.schema().feature_index(name);
    if (!idx)
      fail(Errc::UnknownFeature,
           "ranking names feature '" + name + "' absent from table");
    cols.push_back(*idx);
  }
  if (cols.size() != table.n_features())
    fail(Errc::UnknownFeature, "ranking does not cover the table's features");
  return cols;
}

}  // namespace

DataTable subsample(const DataTable& table, double fraction, uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    fail(Errc::ConfigError, "subsample fraction must lie in (0,1]");
  if (fraction == 1.0) return table;
  size_t n = table.n_rows();
  size_t k = static_cast<size_t>(
      std::llround(fraction * static_cast<double>(n)));
  if (k == 0) fail(Errc::EmptyResult, "subsample rounds to 0 rows");
  Rng rng(seed);
  return table.select_rows(sample_without_replacement(n, k, rng));
}

DataTable drop_weakest_features(const DataTable& table, size_t k,
                                const ImportanceRanking& ranking) {
  if (k > table.n_features())
    fail(Errc::ConfigError, "cannot drop more features than the table has");
  std::vector<size_t> cols = ranked_columns(table, ranking);
  cols.resize(k);  // weakest first
  return table.without_feature_columns(cols);
}

DataTable inject_missingness(const DataTable& table, double rate,
                             const ImportanceRanking& ranking, size_t m,
                             uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 0.6))
    fail(Errc::ConfigError, "missingness rate must lie in [0, 0.6]");
  if (m > table.n_features())
    fail(Errc::ConfigError, "cannot target more features than the table has");
  if (rate == 0.0 || m == 0) return table;

  std::vector<size_t> under_rows;
  for (size_t r = 0; r < table.n_rows(); ++r)
    if (table.group(r) == Group::Underprivileged) under_rows.push_back(r);

  size_t per_feature = static_cast<size_t>(
      std::floor(rate * static_cast<double>(under_rows.size())));
  if (per_feature == 0) return table;

  std::vector<size_t> cols = ranked_columns(table, ranking);
  DataTable out = table;
  // The m most important features are the ranking's tail.
  for (size_t i = 0; i < m; ++i) {
    size_t col = cols[cols.size() - 1 - i];
    Rng rng(derive_seed(seed, col, "missingness_feature"));
    std::vector<size_t> picks =
        sample_without_replacement(under_rows.size(), per_feature, rng);
    std::vector<size_t> rows;
    rows.reserve(picks.size());
    for (size_t p : picks) rows.push_back(under_rows[p]);
    out = out.with_cells_missing(col, rows);
  }
  return out;
}

DataTable skew_disparity(const DataTable& table, double share, uint64_t seed) {
  if (!(share >= 0.0 && share <= 1.0))
    fail(Errc::ConfigError, "skew share must lie in [0,1]");
  if (!table.has_predictions())
    fail(Errc::PredictionsAbsent, "skew_disparity needs predictions");

  std::vector<size_t> positives;
  for (size_t r = 0; r < table.n_rows(); ++r)
    if (table.yhat(r) == 1) positives.push_back(r);
  if (positives.empty())
    fail(Errc::NoPositivePredictions, "no rows with a positive prediction");

  size_t to_under = static_cast<size_t>(
      std::llround(share * static_cast<double>(positives.size())));
  Rng rng(seed);
  std::vector<size_t> picks =
      sample_without_replacement(positives.size(), to_under, rng);

  std::vector<uint8_t> group = table.group_raw();
  for (size_t r : positives) group[r] = 0;  // rest go privileged
  for (size_t p : picks) group[positives[p]] = 1;
  return table.with_groups(std::move(group));
}

void DegradationSpec::validate() const {
  switch (kind) {
    case Kind::Subsample:
      if (!(fraction > 0.0 && fraction <= 1.0))
        fail(Errc::ConfigError, "subsample fraction must lie in (0,1]");
      break;
    case Kind::DropWeakestFeatures:
      break;  // drop_count bound checked against the table at apply time
    case Kind::DisparateMissingness:
      if (!(rate >= 0.0 && rate <= 0.6))
        fail(Errc::ConfigError, "missingness rate must lie in [0, 0.6]");
      break;
  }
}

std::string DegradationSpec::label() const {
  switch (kind) {
    case Kind::Subsample: return "subsample=" + format_double(fraction);
    case Kind::DropWeakestFeatures:
      return "features=" + std::to_string(drop_count);
    case Kind::DisparateMissingness:
      return "missingness=" + format_double(rate);
  }
  return "?";
}

DataTable DegradationSpec::apply(const DataTable& table,
                                 const ImportanceRanking& ranking,
                                 uint64_t seed) const {
  switch (kind) {
    case Kind::Subsample: return subsample(table, fraction, seed);
    case Kind::DropWeakestFeatures:
      return drop_weakest_features(table, drop_count, ranking);
    case Kind::DisparateMissingness:
      return inject_missingness(table, rate, ranking,
                                std::min(top_features, table.n_features()),
                                seed);
  }
  fail(Errc::ConfigError, "unknown degradation kind");
}

}  // namespace auditbench
