#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "auditbench/errors.hpp"

namespace auditbench {

enum class FeatureKind { Numeric, Categorical };

enum class Group : uint8_t { Privileged = 0, Underprivileged = 1 };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::Numeric;
};

// Column roles for a table: which columns are features, which carries the
// demographic group, the ground-truth label, and (optionally) predictions.
struct Schema {
  std::vector<FeatureSpec> features;
  std::string group_column;
  std::string target_column;
  std::string prediction_column;  // empty = no prediction column
  std::string privileged_value;
  std::string underprivileged_value;
  std::string missing_token;  // CSV cell treated as MISSING, default ""

  void validate() const;
  std::optional<size_t> feature_index(std::string_view name) const;
  Schema without_predictions() const;
};

// Immutable tabular dataset. Feature cells are stored as doubles: numeric
// columns hold the value directly, categorical columns hold an index into
// that column's category list. NaN marks a MISSING cell in either kind.
class DataTable {
 public:
  static constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

  static bool cell_is_missing(double v) { return v != v; }

  // Validates all invariants (arity, kinds, label values, uniform
  // prediction availability) before constructing.
  static DataTable from_parts(Schema schema,
                              std::vector<std::vector<double>> feature_columns,
                              std::vector<std::vector<std::string>> categories,
                              std::vector<uint8_t> group, std::vector<uint8_t> y,
                              std::vector<uint8_t> yhat);

  const Schema& schema() const { return schema_; }
  size_t n_rows() const { return y_.size(); }
  size_t n_features() const { return schema_.features.size(); }

  double cell(size_t row, size_t col) const { return columns_[col][row]; }
  bool is_missing(size_t row, size_t col) const {
    return cell_is_missing(columns_[col][row]);
  }
  const std::vector<double>& column(size_t col) const { return columns_[col]; }
  const std::vector<std::string>& categories(size_t col) const {
    return categories_[col];
  }

  Group group(size_t row) const { return static_cast<Group>(group_[row]); }
  int y(size_t row) const { return y_[row]; }
  bool has_predictions() const { return !yhat_.empty(); }
  int yhat(size_t row) const { return yhat_[row]; }

  const std::vector<uint8_t>& group_raw() const { return group_; }
  const std::vector<uint8_t>& y_raw() const { return y_; }
  const std::vector<uint8_t>& yhat_raw() const { return yhat_; }

  // Transformers; all return new tables.
  DataTable with_predictions(std::vector<uint8_t> yhat) const;
  DataTable without_predictions() const;
  DataTable with_groups(std::vector<uint8_t> group) const;
  DataTable select_rows(const std::vector<size_t>& rows) const;
  DataTable without_feature_columns(const std::vector<size_t>& cols) const;
  DataTable with_cells_missing(size_t col, const std::vector<size_t>& rows) const;

  bool identical_to(const DataTable& other) const;

 private:
  DataTable() = default;

  Schema schema_;
  std::vector<std::vector<double>> columns_;           // column-major features
  std::vector<std::vector<std::string>> categories_;   // per feature column
  std::vector<uint8_t> group_;
  std::vector<uint8_t> y_;
  std::vector<uint8_t> yhat_;  // empty = predictions absent
};

struct SplitSpec {
  double fraction = 0.7;
  uint64_t seed = 0;

  void validate() const;
};

// Parameterized generator for desk-scale audit datasets. Rows are i.i.d.:
// group ~ Bernoulli(group_balance) (success = underprivileged), numeric
// features are standard normal, categorical features uniform over three
// levels. y ~ Bernoulli(sigmoid(signal_strength * w.x + offset_g)) where the
// feature weights decay as 2^-j (feature 0 is always the strongest signal
// carrier) and the per-group offsets are solved so the empirical base rates
// approach the configured ones.
struct BenchmarkSpec {
  size_t n_rows = 1000;
  size_t n_numeric_features = 4;
  size_t n_categorical_features = 0;
  double group_balance = 0.5;  // P(row is underprivileged)
  double base_rate_privileged = 0.5;
  double base_rate_underprivileged = 0.5;
  double signal_strength = 1.0;
  uint64_t seed = 0;

  void validate() const;
};

DataTable load_csv(const std::string& path, const Schema& schema);
void write_csv(const DataTable& table, const std::string& path);

// Seeded partition into (first, second) where the first part receives
// round(fraction * n) rows, clamped so both parts keep at least one row.
// Both parts preserve relative source order.
std::pair<DataTable, DataTable> split(const DataTable& table,
                                      const SplitSpec& spec);

DataTable generate_benchmark(const BenchmarkSpec& spec);

}  // namespace auditbench
