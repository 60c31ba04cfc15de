#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "auditbench/dataset.hpp"

namespace auditbench {

enum class ModelClass { LogisticRegression, BoostedStumps, DpLogisticRegression };
enum class ImputationPolicy { MeanMode, Zero };

const char* model_class_name(ModelClass c);
std::optional<ModelClass> model_class_from_name(std::string_view name);

struct ModelSpec {
  ModelClass model_class = ModelClass::LogisticRegression;
  double learning_rate = 0.5;
  int epochs = 200;
  int n_stumps = 50;
  double l2 = 0.0;
  std::optional<double> dp_epsilon;  // required iff DpLogisticRegression
  ImputationPolicy imputation = ImputationPolicy::MeanMode;

  void validate() const;
};

struct Stump {
  size_t column = 0;      // encoded-space column
  double threshold = 0;   // goes left if x <= threshold
  double left_value = 0;
  double right_value = 0;
};

// Feature encoder state learned from the training table: imputation
// statistics plus one-hot category lists (training first-appearance order).
struct FeatureEncoder {
  std::vector<std::string> feature_names;
  std::vector<FeatureKind> feature_kinds;
  std::vector<std::vector<std::string>> categories;  // per categorical feature
  std::vector<double> numeric_impute;                // training mean (or 0)
  std::vector<int> mode_impute;                      // training mode index (or -1)
  ImputationPolicy policy = ImputationPolicy::MeanMode;

  size_t encoded_width() const;
  // Encodes one source-table row into the training feature space. Columns
  // missing from the source table are treated as all-MISSING.
  void encode_row(const DataTable& table, size_t row,
                  const std::vector<int>& column_map, std::vector<double>& out) const;
  // Maps encoder features to source-table columns by name; -1 when absent.
  std::vector<int> map_columns(const DataTable& table) const;
};

struct TrainedModel {
  ModelSpec spec;
  FeatureEncoder encoder;

  // Logistic parameters (also the carrier for the DP variant).
  std::vector<double> weights;
  double intercept = 0;
  std::vector<double> scale_min, scale_max;  // [0,1] scaling, DP class only

  // Boosted-stump parameters.
  std::vector<Stump> stumps;
  double base_score = 0;

  // Single-class training yields a flagged constant predictor.
  bool degenerate = false;
  int degenerate_label = 0;

  std::vector<double> train_loss_curve;
};

// Weakest-to-strongest feature ordering with non-negative scores.
struct ImportanceRanking {
  std::vector<std::pair<std::string, double>> entries;  // ascending by score
};

TrainedModel train(const ModelSpec& spec, const DataTable& table, uint64_t seed);

// Output-perturbed L2-regularized logistic regression: features are scaled
// to [0,1] internally and Laplace(2 / (n * l2 * epsilon)) noise is added to
// every learned weight.
TrainedModel train_dp(const ModelSpec& spec, const DataTable& table,
                      uint64_t seed);

std::vector<double> predict_proba(const TrainedModel& model,
                                  const DataTable& table);

// Fills yhat for every row (threshold 0.5). Features absent from the table
// are imputed from training statistics, so prediction never fails on
// degraded inputs.
DataTable predict(const TrainedModel& model, const DataTable& table);

// Permutation importance: mean accuracy drop over 5 shuffles per feature,
// clamped at 0, returned weakest first. Requires y labels and >= 20 rows.
ImportanceRanking feature_importance(const TrainedModel& model,
                                     const DataTable& table, uint64_t seed);

void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

}  // namespace auditbench
