#include "auditbench/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "auditbench/rng.hpp"

namespace auditbench {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Shortest round-trip decimal representation.
std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  double value = 0.0;
  auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end) return std::nullopt;
  return value;
}

// RFC-4180-style line splitting with quoted fields. The reader below has
// already joined physical lines for quoted newlines.
std::vector<std::string> split_csv_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool in_quotes = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        current += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    out += c;
  }
  out += '"';
  return out;
}

// Reads logical CSV records, honoring quoted embedded newlines.
std::vector<std::string> read_records(std::istream& in) {
  std::vector<std::string> records;
  std::string line;
  std::string pending;
  bool open_quote = false;
  auto count_quotes = [](const std::string& s) {
    return std::count(s.begin(), s.end(), '"');
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (open_quote) {
      pending += '\n';
      pending += line;
    } else {
      pending = line;
    }
    open_quote = (count_quotes(pending) % 2) != 0;
    if (!open_quote) {
      records.push_back(pending);
      pending.clear();
    }
  }
  if (!pending.empty()) records.push_back(pending);
  return records;
}

}  // namespace

void Schema::validate() const {
  if (group_column.empty() || target_column.empty())
    fail(Errc::ConfigError, "schema requires group and target column names");
  std::set<std::string> names;
  for (const auto& f : features) {
    if (f.name.empty()) fail(Errc::ConfigError, "empty feature name");
    if (!names.insert(f.name).second)
      fail(Errc::ConfigError, "duplicate feature column '" + f.name + "'");
  }
  std::vector<std::string> roles = {group_column, target_column};
  if (!prediction_column.empty()) roles.push_back(prediction_column);
  for (size_t i = 0; i < roles.size(); ++i) {
    for (size_t j = i + 1; j < roles.size(); ++j) {
      if (roles[i] == roles[j])
        fail(Errc::ConfigError, "role columns must be pairwise distinct");
    }
    if (names.count(roles[i]))
      fail(Errc::ConfigError,
           "role column '" + roles[i] + "' collides with a feature column");
  }
  if (privileged_value == underprivileged_value)
    fail(Errc::ConfigError,
         "privileged and underprivileged values must differ");
  if (privileged_value.empty() || underprivileged_value.empty())
    fail(Errc::ConfigError, "group values must be non-empty");
}

std::optional<size_t> Schema::feature_index(std::string_view name) const {
  for (size_t i = 0; i < features.size(); ++i) {
    if (features[i].name == name) return i;
  }
  return std::nullopt;
}

Schema Schema::without_predictions() const {
  Schema out = *this;
  out.prediction_column.clear();
  return out;
}

void SplitSpec::validate() const {
  if (!(fraction > 0.0 && fraction < 1.0))
    fail(Errc::ConfigError, "split fraction must lie strictly in (0,1)");
}

void BenchmarkSpec::validate() const {
  if (n_rows == 0) fail(Errc::ConfigError, "benchmark n_rows must be positive");
  auto open_unit = [](double v, const char* what) {
    if (!(v > 0.0 && v < 1.0))
      fail(Errc::ConfigError,
           std::string(what) + " must lie strictly in (0,1)");
  };
  open_unit(group_balance, "group_balance");
  open_unit(base_rate_privileged, "base_rate_privileged");
  open_unit(base_rate_underprivileged, "base_rate_underprivileged");
  if (signal_strength < 0.0)
    fail(Errc::ConfigError, "signal_strength must be non-negative");
}

DataTable DataTable::from_parts(
    Schema schema, std::vector<std::vector<double>> feature_columns,
    std::vector<std::vector<std::string>> categories, std::vector<uint8_t> group,
    std::vector<uint8_t> y, std::vector<uint8_t> yhat) {
  schema.validate();
  size_t n = y.size();
  if (group.size() != n)
    fail(Errc::ConfigError, "group column length mismatch");
  if (!yhat.empty() && yhat.size() != n)
    fail(Errc::ConfigError, "prediction column length mismatch");
  if (feature_columns.size() != schema.features.size() ||
      categories.size() != schema.features.size())
    fail(Errc::ConfigError, "feature column count does not match schema");
  for (size_t c = 0; c < feature_columns.size(); ++c) {
    if (feature_columns[c].size() != n)
      fail(Errc::ConfigError,
           "feature column '" + schema.features[c].name + "' length mismatch");
    if (schema.features[c].kind == FeatureKind::Categorical) {
      for (double v : feature_columns[c]) {
        if (cell_is_missing(v)) continue;
        size_t idx = static_cast<size_t>(v);
        if (static_cast<double>(idx) != v || idx >= categories[c].size())
          fail(Errc::ConfigError,
               "categorical cell outside declared domain in '" +
                   schema.features[c].name + "'");
      }
    }
  }
  for (uint8_t g : group)
    if (g > 1) fail(Errc::ConfigError, "group cells must be 0 or 1");
  for (uint8_t v : y)
    if (v > 1) fail(Errc::ConfigError, "y cells must be 0 or 1");
  for (uint8_t v : yhat)
    if (v > 1) fail(Errc::ConfigError, "prediction cells must be 0 or 1");

  DataTable t;
  t.schema_ = std::move(schema);
  t.columns_ = std::move(feature_columns);
  t.categories_ = std::move(categories);
  t.group_ = std::move(group);
  t.y_ = std::move(y);
  t.yhat_ = std::move(yhat);
  return t;
}

DataTable DataTable::with_predictions(std::vector<uint8_t> yhat) const {
  DataTable t = *this;
  if (t.schema_.prediction_column.empty()) t.schema_.prediction_column = "yhat";
  if (yhat.size() != n_rows())
    fail(Errc::ConfigError, "prediction vector length mismatch");
  for (uint8_t v : yhat)
    if (v > 1) fail(Errc::ConfigError, "prediction cells must be 0 or 1");
  t.yhat_ = std::move(yhat);
  return t;
}

DataTable DataTable::without_predictions() const {
  DataTable t = *this;
  t.yhat_.clear();
  t.schema_.prediction_column.clear();
  return t;
}

DataTable DataTable::with_groups(std::vector<uint8_t> group) const {
  DataTable t = *this;
  if (group.size() != n_rows())
    fail(Errc::ConfigError, "group vector length mismatch");
  for (uint8_t g : group)
    if (g > 1) fail(Errc::ConfigError, "group cells must be 0 or 1");
  t.group_ = std::move(group);
  return t;
}

DataTable DataTable::select_rows(const std::vector<size_t>& rows) const {
  DataTable t;
  t.schema_ = schema_;
  t.categories_ = categories_;
  t.columns_.resize(columns_.size());
  for (size_t c = 0; c < columns_.size(); ++c) {
    t.columns_[c].reserve(rows.size());
    for (size_t r : rows) t.columns_[c].push_back(columns_[c][r]);
  }
  auto pick = [&rows](const std::vector<uint8_t>& src) {
    std::vector<uint8_t> out;
    out.reserve(rows.size());
    for (size_t r : rows) out.push_back(src[r]);
    return out;
  };
  t.group_ = pick(group_);
  t.y_ = pick(y_);
  if (!yhat_.empty()) t.yhat_ = pick(yhat_);
  return t;
}

DataTable DataTable::without_feature_columns(
    const std::vector<size_t>& cols) const {
  std::vector<bool> drop(n_features(), false);
  for (size_t c : cols) {
    if (c >= n_features()) fail(Errc::UnknownFeature, "column index out of range");
    drop[c] = true;
  }
  DataTable t;
  t.schema_ = schema_;
  t.schema_.features.clear();
  for (size_t c = 0; c < n_features(); ++c) {
    if (drop[c]) continue;
    t.schema_.features.push_back(schema_.features[c]);
    t.columns_.push_back(columns_[c]);
    t.categories_.push_back(categories_[c]);
  }
  t.group_ = group_;
  t.y_ = y_;
  t.yhat_ = yhat_;
  return t;
}

DataTable DataTable::with_cells_missing(size_t col,
                                        const std::vector<size_t>& rows) const {
  DataTable t = *this;
  for (size_t r : rows) t.columns_[col][r] = kMissing;
  return t;
}

bool DataTable::identical_to(const DataTable& other) const {
  if (n_rows() != other.n_rows() || n_features() != other.n_features())
    return false;
  if (group_ != other.group_ || y_ != other.y_ || yhat_ != other.yhat_)
    return false;
  for (size_t c = 0; c < columns_.size(); ++c) {
    if (schema_.features[c].kind != other.schema_.features[c].kind) return false;
    bool categorical = schema_.features[c].kind == FeatureKind::Categorical;
    for (size_t r = 0; r < columns_[c].size(); ++r) {
      double a = columns_[c][r];
      double b = other.columns_[c][r];
      bool am = cell_is_missing(a);
      bool bm = cell_is_missing(b);
      if (am != bm) return false;
      if (am) continue;
      if (categorical) {
        // Category index spaces may differ (e.g. first-appearance order
        // after a CSV round trip); compare through the labels.
        if (categories_[c][static_cast<size_t>(a)] !=
            other.categories_[c][static_cast<size_t>(b)])
          return false;
      } else if (a != b) {
        return false;
      }
    }
  }
  return true;
}

DataTable load_csv(const std::string& path, const Schema& schema) {
  schema.validate();
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open '" + path + "'");
  std::vector<std::string> records = read_records(in);
  if (records.empty()) fail(Errc::EmptyFile, "'" + path + "' has no header");

  std::vector<std::string> header = split_csv_record(records[0]);
  std::unordered_map<std::string, size_t> col_of;
  for (size_t i = 0; i < header.size(); ++i) col_of.emplace(header[i], i);

  auto require = [&](const std::string& name) {
    auto it = col_of.find(name);
    if (it == col_of.end())
      fail(Errc::MissingColumn, "column '" + name + "' absent from header");
    return it->second;
  };

  std::vector<size_t> feature_cols;
  for (const auto& f : schema.features) feature_cols.push_back(require(f.name));
  size_t group_col = require(schema.group_column);
  size_t target_col = require(schema.target_column);
  std::optional<size_t> pred_col;
  if (!schema.prediction_column.empty())
    pred_col = require(schema.prediction_column);

  if (records.size() == 1) fail(Errc::EmptyFile, "'" + path + "' has no rows");

  size_t n = records.size() - 1;
  std::vector<std::vector<double>> columns(schema.features.size());
  std::vector<std::vector<std::string>> categories(schema.features.size());
  std::vector<std::unordered_map<std::string, size_t>> cat_index(
      schema.features.size());
  std::vector<uint8_t> group, y, yhat;
  group.reserve(n);
  y.reserve(n);

  for (size_t r = 0; r < n; ++r) {
    std::vector<std::string> fields = split_csv_record(records[r + 1]);
    if (fields.size() < header.size())
      fields.resize(header.size());  // trailing empties
    auto cell = [&](size_t c) -> const std::string& { return fields[c]; };

    for (size_t f = 0; f < schema.features.size(); ++f) {
      const std::string& raw = cell(feature_cols[f]);
      if (raw == schema.missing_token) {
        columns[f].push_back(DataTable::kMissing);
        continue;
      }
      if (schema.features[f].kind == FeatureKind::Numeric) {
        auto v = parse_double(raw);
        columns[f].push_back(v ? *v : DataTable::kMissing);
      } else {
        auto it = cat_index[f].find(raw);
        size_t idx;
        if (it == cat_index[f].end()) {
          idx = categories[f].size();
          categories[f].push_back(raw);
          cat_index[f].emplace(raw, idx);
        } else {
          idx = it->second;
        }
        columns[f].push_back(static_cast<double>(idx));
      }
    }

    const std::string& g = cell(group_col);
    if (g == schema.privileged_value) {
      group.push_back(0);
    } else if (g == schema.underprivileged_value) {
      group.push_back(1);
    } else {
      fail(Errc::BadLabel, "row " + std::to_string(r) + ": group cell '" + g +
                               "' outside declared values");
    }

    const std::string& t = cell(target_col);
    if (t == "0") {
      y.push_back(0);
    } else if (t == "1") {
      y.push_back(1);
    } else {
      fail(Errc::BadLabel, "row " + std::to_string(r) + ": target cell '" + t +
                               "' is not 0 or 1");
    }

    if (pred_col) {
      const std::string& p = cell(*pred_col);
      if (p == "0") {
        yhat.push_back(0);
      } else if (p == "1") {
        yhat.push_back(1);
      } else {
        fail(Errc::BadLabel, "row " + std::to_string(r) +
                                 ": prediction cell '" + p + "' is not 0 or 1");
      }
    }
  }

  return DataTable::from_parts(schema, std::move(columns), std::move(categories),
                               std::move(group), std::move(y), std::move(yhat));
}

void write_csv(const DataTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::IoError, "cannot write '" + path + "'");
  const Schema& s = table.schema();

  std::string header;
  for (const auto& f : s.features) {
    header += csv_escape(f.name);
    header += ',';
  }
  header += csv_escape(s.group_column);
  header += ',';
  header += csv_escape(s.target_column);
  if (table.has_predictions()) {
    header += ',';
    header += csv_escape(s.prediction_column.empty() ? "yhat"
                                                     : s.prediction_column);
  }
  out << header << '\n';

  for (size_t r = 0; r < table.n_rows(); ++r) {
    std::string line;
    for (size_t c = 0; c < table.n_features(); ++c) {
      if (table.is_missing(r, c)) {
        line += s.missing_token;
      } else if (s.features[c].kind == FeatureKind::Numeric) {
        line += format_double(table.cell(r, c));
      } else {
        line += csv_escape(
            table.categories(c)[static_cast<size_t>(table.cell(r, c))]);
      }
      line += ',';
    }
    line += csv_escape(table.group(r) == Group::Privileged
                           ? s.privileged_value
                           : s.underprivileged_value);
    line += ',';
    line += static_cast<char>('0' + table.y(r));
    if (table.has_predictions()) {
      line += ',';
      line += static_cast<char>('0' + table.yhat(r));
    }
    out << line << '\n';
  }
}

std::pair<DataTable, DataTable> split(const DataTable& table,
                                      const SplitSpec& spec) {
  spec.validate();
  size_t n = table.n_rows();
  if (n < 2) fail(Errc::DegenerateSplit, "need at least 2 rows to split");

  size_t k = static_cast<size_t>(std::llround(spec.fraction * static_cast<double>(n)));
  // Clamp so both parts keep at least one row.
  k = std::max<size_t>(1, std::min(k, n - 1));

  Rng rng(spec.seed);
  std::vector<size_t> first = sample_without_replacement(n, k, rng);
  std::vector<bool> taken(n, false);
  for (size_t i : first) taken[i] = true;
  std::vector<size_t> second;
  second.reserve(n - k);
  for (size_t i = 0; i < n; ++i)
    if (!taken[i]) second.push_back(i);

  return {table.select_rows(first), table.select_rows(second)};
}

DataTable generate_benchmark(const BenchmarkSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, 0, "benchmark"));

  size_t n = spec.n_rows;
  size_t n_num = spec.n_numeric_features;
  size_t n_cat = spec.n_categorical_features;
  const std::vector<std::string> levels = {"a", "b", "c"};

  Schema schema;
  for (size_t j = 0; j < n_num; ++j)
    schema.features.push_back({"f" + std::to_string(j), FeatureKind::Numeric});
  for (size_t j = 0; j < n_cat; ++j)
    schema.features.push_back(
        {"c" + std::to_string(j), FeatureKind::Categorical});
  schema.group_column = "group";
  schema.target_column = "y";
  schema.privileged_value = "privileged";
  schema.underprivileged_value = "underprivileged";

  // Per-category signal weights for categorical columns, drawn once. Numeric
  // weights decay 2^-j so low-index features dominate the signal.
  std::vector<std::vector<double>> cat_weights(n_cat);
  {
    Rng wrng(derive_seed(spec.seed, 1, "benchmark_weights"));
    for (size_t j = 0; j < n_cat; ++j) {
      cat_weights[j].resize(levels.size());
      for (auto& w : cat_weights[j])
        w = wrng.normal() * std::pow(2.0, -static_cast<double>(n_num + j));
    }
  }

  std::vector<std::vector<double>> columns(n_num + n_cat);
  std::vector<std::vector<std::string>> categories(n_num + n_cat);
  for (size_t j = 0; j < n_cat; ++j) categories[n_num + j] = levels;

  std::vector<uint8_t> group(n);
  std::vector<double> signal(n, 0.0);
  for (size_t r = 0; r < n; ++r) {
    group[r] = rng.bernoulli(spec.group_balance) ? 1 : 0;
    double s = 0.0;
    for (size_t j = 0; j < n_num; ++j) {
      double v = rng.normal();
      columns[j].push_back(v);
      s += v * std::pow(2.0, -static_cast<double>(j));
    }
    for (size_t j = 0; j < n_cat; ++j) {
      size_t lvl = static_cast<size_t>(rng.below(levels.size()));
      columns[n_num + j].push_back(static_cast<double>(lvl));
      s += cat_weights[j][lvl];
    }
    signal[r] = spec.signal_strength * s;
  }

  // Solve the per-group offset o so that mean(sigmoid(signal_i + o)) over the
  // group's rows hits the configured base rate; monotone, so bisect.
  auto solve_offset = [&](uint8_t g, double target) {
    double lo = -40.0, hi = 40.0;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      double mean = 0.0;
      size_t count = 0;
      for (size_t r = 0; r < n; ++r) {
        if (group[r] != g) continue;
        mean += sigmoid(signal[r] + mid);
        ++count;
      }
      if (count == 0) return 0.0;
      mean /= static_cast<double>(count);
      (mean < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  double offset_priv = solve_offset(0, spec.base_rate_privileged);
  double offset_under = solve_offset(1, spec.base_rate_underprivileged);

  std::vector<uint8_t> y(n);
  for (size_t r = 0; r < n; ++r) {
    double o = group[r] ? offset_under : offset_priv;
    y[r] = rng.bernoulli(sigmoid(signal[r] + o)) ? 1 : 0;
  }

  return DataTable::from_parts(std::move(schema), std::move(columns),
                               std::move(categories), std::move(group),
                               std::move(y), {});
}

}  // namespace auditbench
