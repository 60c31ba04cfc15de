#include "auditbench/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "auditbench/rng.hpp"

namespace auditbench {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double log_loss_term(double p, uint8_t y) {
  constexpr double eps = 1e-12;
  p = std::clamp(p, eps, 1.0 - eps);
  return y ? -std::log(p) : -std::log(1.0 - p);
}

}  // namespace

const char* model_class_name(ModelClass c) {
  switch (c) {
    case ModelClass::LogisticRegression: return "logistic_regression";
    case ModelClass::BoostedStumps: return "boosted_stumps";
    case ModelClass::DpLogisticRegression: return "dp_logistic_regression";
  }
  return "?";
}

std::optional<ModelClass> model_class_from_name(std::string_view name) {
  if (name == "logistic_regression") return ModelClass::LogisticRegression;
  if (name == "boosted_stumps") return ModelClass::BoostedStumps;
  if (name == "dp_logistic_regression") return ModelClass::DpLogisticRegression;
  return std::nullopt;
}

void ModelSpec::validate() const {
  if (!(learning_rate > 0.0))
    fail(Errc::ConfigError, "learning_rate must be positive");
  if (epochs <= 0) fail(Errc::ConfigError, "epochs must be positive");
  if (n_stumps <= 0) fail(Errc::ConfigError, "n_stumps must be positive");
  if (l2 < 0.0) fail(Errc::ConfigError, "l2 must be non-negative");
  bool is_dp = model_class == ModelClass::DpLogisticRegression;
  if (is_dp != dp_epsilon.has_value())
    fail(Errc::ConfigError,
         "dp_epsilon must be present exactly for dp_logistic_regression");
  if (is_dp && !(*dp_epsilon > 0.0))
    fail(Errc::NonPositiveEpsilon, "dp_epsilon must be positive");
}

size_t FeatureEncoder::encoded_width() const {
  size_t w = 0;
  for (size_t f = 0; f < feature_kinds.size(); ++f)
    w += feature_kinds[f] == FeatureKind::Numeric ? 1 : categories[f].size();
  return w;
}

std::vector<int> FeatureEncoder::map_columns(const DataTable& table) const {
  std::vector<int> map(feature_names.size(), -1);
  for (size_t f = 0; f < feature_names.size(); ++f) {
    auto idx = table.schema().feature_index(feature_names[f]);
    if (idx) map[f] = static_cast<int>(*idx);
  }
  return map;
}

void FeatureEncoder::encode_row(const DataTable& table, size_t row,
                                const std::vector<int>& column_map,
                                std::vector<double>& out) const {
  out.assign(encoded_width(), 0.0);
  size_t pos = 0;
  for (size_t f = 0; f < feature_names.size(); ++f) {
    int col = column_map[f];
    bool missing = col < 0 || table.is_missing(row, static_cast<size_t>(col));
    if (feature_kinds[f] == FeatureKind::Numeric) {
      double v;
      if (missing) {
        v = policy == ImputationPolicy::MeanMode ? numeric_impute[f] : 0.0;
      } else {
        v = table.cell(row, static_cast<size_t>(col));
      }
      out[pos++] = v;
    } else {
      size_t width = categories[f].size();
      int hot = -1;
      if (missing) {
        if (policy == ImputationPolicy::MeanMode) hot = mode_impute[f];
      } else {
        // Match through category strings: index spaces differ per table.
        const auto& table_cats =
            table.categories(static_cast<size_t>(col));
        size_t idx = static_cast<size_t>(table.cell(row, static_cast<size_t>(col)));
        const std::string& label = table_cats[idx];
        for (size_t k = 0; k < width; ++k) {
          if (categories[f][k] == label) {
            hot = static_cast<int>(k);
            break;
          }
        }
        // Unseen category: all zeros.
      }
      if (hot >= 0) out[pos + static_cast<size_t>(hot)] = 1.0;
      pos += width;
    }
  }
}

namespace {

FeatureEncoder build_encoder(const ModelSpec& spec, const DataTable& table) {
  FeatureEncoder enc;
  enc.policy = spec.imputation;
  size_t nf = table.n_features();
  enc.feature_names.reserve(nf);
  for (size_t f = 0; f < nf; ++f) {
    const FeatureSpec& fs = table.schema().features[f];
    enc.feature_names.push_back(fs.name);
    enc.feature_kinds.push_back(fs.kind);
    if (fs.kind == FeatureKind::Numeric) {
      double sum = 0.0;
      size_t count = 0;
      for (size_t r = 0; r < table.n_rows(); ++r) {
        if (table.is_missing(r, f)) continue;
        sum += table.cell(r, f);
        ++count;
      }
      enc.numeric_impute.push_back(count ? sum / static_cast<double>(count)
                                         : 0.0);
      enc.mode_impute.push_back(-1);
      enc.categories.emplace_back();
    } else {
      // Training first-appearance order.
      std::vector<std::string> cats;
      std::unordered_map<std::string, size_t> counts;
      for (size_t r = 0; r < table.n_rows(); ++r) {
        if (table.is_missing(r, f)) continue;
        const std::string& label =
            table.categories(f)[static_cast<size_t>(table.cell(r, f))];
        auto [it, inserted] = counts.emplace(label, 0);
        if (inserted) cats.push_back(label);
        ++it->second;
      }
      int mode = -1;
      size_t best = 0;
      for (size_t k = 0; k < cats.size(); ++k) {
        if (counts[cats[k]] > best) {
          best = counts[cats[k]];
          mode = static_cast<int>(k);
        }
      }
      enc.categories.push_back(std::move(cats));
      enc.mode_impute.push_back(mode);
      enc.numeric_impute.push_back(0.0);
    }
  }
  return enc;
}

// Row-major encoded design matrix.
std::vector<std::vector<double>> encode_table(const FeatureEncoder& enc,
                                              const DataTable& table) {
  std::vector<int> map = enc.map_columns(table);
  std::vector<std::vector<double>> rows(table.n_rows());
  for (size_t r = 0; r < table.n_rows(); ++r)
    enc.encode_row(table, r, map, rows[r]);
  return rows;
}

double logistic_loss(const std::vector<std::vector<double>>& x,
                     const std::vector<uint8_t>& y,
                     const std::vector<double>& w, double b, double l2) {
  double loss = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    double z = b;
    for (size_t j = 0; j < w.size(); ++j) z += w[j] * x[i][j];
    loss += log_loss_term(sigmoid(z), y[i]);
  }
  loss /= static_cast<double>(x.size());
  double reg = 0.0;
  for (double wj : w) reg += wj * wj;
  return loss + 0.5 * l2 * reg;
}

// Full-batch gradient descent. The step size is halved whenever an epoch
// would increase the loss, which keeps the recorded loss curve
// non-increasing on every dataset.
void fit_logistic(const std::vector<std::vector<double>>& x,
                  const std::vector<uint8_t>& y, double learning_rate,
                  int epochs, double l2, std::vector<double>& w, double& b,
                  std::vector<double>& loss_curve) {
  size_t n = x.size();
  size_t d = x.empty() ? 0 : x[0].size();
  w.assign(d, 0.0);
  b = 0.0;
  double lr = learning_rate;
  double prev_loss = logistic_loss(x, y, w, b, l2);
  loss_curve.clear();

  std::vector<double> grad(d);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    bool accepted = false;
    for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
      std::fill(grad.begin(), grad.end(), 0.0);
      double grad_b = 0.0;
      for (size_t i = 0; i < n; ++i) {
        double z = b;
        for (size_t j = 0; j < d; ++j) z += w[j] * x[i][j];
        double err = sigmoid(z) - static_cast<double>(y[i]);
        for (size_t j = 0; j < d; ++j) grad[j] += err * x[i][j];
        grad_b += err;
      }
      double inv_n = 1.0 / static_cast<double>(n);
      std::vector<double> w_next(d);
      for (size_t j = 0; j < d; ++j)
        w_next[j] = w[j] - lr * (grad[j] * inv_n + l2 * w[j]);
      double b_next = b - lr * grad_b * inv_n;
      double loss = logistic_loss(x, y, w_next, b_next, l2);
      if (loss <= prev_loss + 1e-12) {
        w = std::move(w_next);
        b = b_next;
        prev_loss = loss;
        accepted = true;
      } else {
        lr *= 0.5;
      }
    }
    if (!accepted) break;  // converged: any step increases the loss
    loss_curve.push_back(prev_loss);
  }
}

void fit_stumps(const std::vector<std::vector<double>>& x,
                const std::vector<uint8_t>& y, const ModelSpec& spec,
                std::vector<Stump>& stumps, double& base_score,
                std::vector<double>& loss_curve) {
  size_t n = x.size();
  size_t d = x.empty() ? 0 : x[0].size();

  double pos = 0.0;
  for (uint8_t yi : y) pos += yi;
  double p0 = std::clamp(pos / static_cast<double>(n), 1e-6, 1.0 - 1e-6);
  base_score = std::log(p0 / (1.0 - p0));

  // Column sort orders are reused across rounds.
  std::vector<std::vector<size_t>> order(d);
  for (size_t j = 0; j < d; ++j) {
    order[j].resize(n);
    std::iota(order[j].begin(), order[j].end(), size_t{0});
    std::stable_sort(order[j].begin(), order[j].end(),
                     [&](size_t a, size_t b) { return x[a][j] < x[b][j]; });
  }

  std::vector<double> score(n, base_score);
  const double lambda = std::max(spec.l2, 1e-6);
  stumps.clear();
  loss_curve.clear();

  for (int round = 0; round < spec.n_stumps; ++round) {
    std::vector<double> resid(n), hess(n);
    double sum_r = 0.0, sum_h = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double p = sigmoid(score[i]);
      resid[i] = static_cast<double>(y[i]) - p;
      hess[i] = std::max(p * (1.0 - p), 1e-12);
      sum_r += resid[i];
      sum_h += hess[i];
    }

    double best_gain = -1.0;
    Stump best;
    double root_gain = sum_r * sum_r / (sum_h + lambda);
    for (size_t j = 0; j < d; ++j) {
      double left_r = 0.0, left_h = 0.0;
      const auto& ord = order[j];
      for (size_t k = 0; k + 1 < n; ++k) {
        size_t i = ord[k];
        left_r += resid[i];
        left_h += hess[i];
        double xv = x[i][j];
        double xn = x[ord[k + 1]][j];
        if (xv == xn) continue;  // not a valid split point
        double right_r = sum_r - left_r;
        double right_h = sum_h - left_h;
        double gain = left_r * left_r / (left_h + lambda) +
                      right_r * right_r / (right_h + lambda) - root_gain;
        if (gain > best_gain + 1e-15) {
          best_gain = gain;
          best.column = j;
          best.threshold = 0.5 * (xv + xn);
          best.left_value = left_r / (left_h + lambda);
          best.right_value = right_r / (right_h + lambda);
        }
      }
    }
    if (best_gain <= 0.0) break;  // no split improves the fit

    best.left_value *= spec.learning_rate;
    best.right_value *= spec.learning_rate;
    stumps.push_back(best);
    for (size_t i = 0; i < n; ++i) {
      score[i] +=
          x[i][best.column] <= best.threshold ? best.left_value : best.right_value;
    }
    double loss = 0.0;
    for (size_t i = 0; i < n; ++i) loss += log_loss_term(sigmoid(score[i]), y[i]);
    loss_curve.push_back(loss / static_cast<double>(n));
  }
}

}  // namespace

TrainedModel train(const ModelSpec& spec, const DataTable& table,
                   uint64_t seed) {
  spec.validate();
  if (table.n_rows() == 0) fail(Errc::EmptyTable, "cannot train on 0 rows");
  if (spec.model_class == ModelClass::DpLogisticRegression)
    return train_dp(spec, table, seed);

  TrainedModel model;
  model.spec = spec;
  model.encoder = build_encoder(spec, table);

  const auto& y = table.y_raw();
  bool has0 = false, has1 = false;
  for (uint8_t v : y) (v ? has1 : has0) = true;
  if (!has0 || !has1) {
    model.degenerate = true;
    model.degenerate_label = has1 ? 1 : 0;
    return model;
  }

  std::vector<std::vector<double>> x = encode_table(model.encoder, table);
  if (spec.model_class == ModelClass::LogisticRegression) {
    fit_logistic(x, y, spec.learning_rate, spec.epochs, spec.l2, model.weights,
                 model.intercept, model.train_loss_curve);
  } else {
    fit_stumps(x, y, spec, model.stumps, model.base_score,
               model.train_loss_curve);
  }
  return model;
}

TrainedModel train_dp(const ModelSpec& spec, const DataTable& table,
                      uint64_t seed) {
  spec.validate();
  if (spec.model_class != ModelClass::DpLogisticRegression)
    fail(Errc::ConfigError, "train_dp requires the dp_logistic_regression class");
  if (!(spec.l2 > 0.0))
    fail(Errc::NonPositiveL2, "output perturbation requires l2 > 0");
  if (table.n_rows() == 0) fail(Errc::EmptyTable, "cannot train on 0 rows");

  TrainedModel model;
  model.spec = spec;
  model.encoder = build_encoder(spec, table);

  const auto& y = table.y_raw();
  bool has0 = false, has1 = false;
  for (uint8_t v : y) (v ? has1 : has0) = true;
  if (!has0 || !has1) {
    model.degenerate = true;
    model.degenerate_label = has1 ? 1 : 0;
    return model;
  }

  std::vector<std::vector<double>> x = encode_table(model.encoder, table);
  size_t d = x.empty() ? 0 : x[0].size();

  // Min-max scale every encoded column to [0,1]; the sensitivity bound for
  // the noise below assumes bounded features.
  model.scale_min.assign(d, 0.0);
  model.scale_max.assign(d, 1.0);
  for (size_t j = 0; j < d; ++j) {
    double lo = x[0][j], hi = x[0][j];
    for (const auto& row : x) {
      lo = std::min(lo, row[j]);
      hi = std::max(hi, row[j]);
    }
    model.scale_min[j] = lo;
    model.scale_max[j] = hi > lo ? hi : lo + 1.0;
  }
  for (auto& row : x)
    for (size_t j = 0; j < d; ++j)
      row[j] = (row[j] - model.scale_min[j]) /
               (model.scale_max[j] - model.scale_min[j]);

  fit_logistic(x, y, spec.learning_rate, spec.epochs, spec.l2, model.weights,
               model.intercept, model.train_loss_curve);

  double scale = 2.0 / (static_cast<double>(table.n_rows()) * spec.l2 *
                        *spec.dp_epsilon);
  Rng rng(derive_seed(seed, 0, "dp_output_perturbation"));
  for (double& w : model.weights) w += rng.laplace(scale);
  model.intercept += rng.laplace(scale);
  return model;
}

std::vector<double> predict_proba(const TrainedModel& model,
                                  const DataTable& table) {
  size_t n = table.n_rows();
  std::vector<double> proba(n);
  if (model.degenerate) {
    std::fill(proba.begin(), proba.end(),
              model.degenerate_label ? 1.0 : 0.0);
    return proba;
  }

  std::vector<int> map = model.encoder.map_columns(table);
  std::vector<double> row;
  bool dp = model.spec.model_class == ModelClass::DpLogisticRegression;
  bool stumps = model.spec.model_class == ModelClass::BoostedStumps;
  for (size_t r = 0; r < n; ++r) {
    model.encoder.encode_row(table, r, map, row);
    if (dp) {
      for (size_t j = 0; j < row.size(); ++j)
        row[j] = (row[j] - model.scale_min[j]) /
                 (model.scale_max[j] - model.scale_min[j]);
    }
    double z;
    if (stumps) {
      z = model.base_score;
      for (const Stump& s : model.stumps)
        z += row[s.column] <= s.threshold ? s.left_value : s.right_value;
    } else {
      z = model.intercept;
      for (size_t j = 0; j < row.size(); ++j) z += model.weights[j] * row[j];
    }
    proba[r] = sigmoid(z);
  }
  return proba;
}

DataTable predict(const TrainedModel& model, const DataTable& table) {
  std::vector<double> proba = predict_proba(model, table);
  std::vector<uint8_t> yhat(proba.size());
  for (size_t i = 0; i < proba.size(); ++i) yhat[i] = proba[i] >= 0.5 ? 1 : 0;
  return table.with_predictions(std::move(yhat));
}

ImportanceRanking feature_importance(const TrainedModel& model,
                                     const DataTable& table, uint64_t seed) {
  if (table.n_rows() < 20)
    fail(Errc::TooFewRows, "permutation importance needs at least 20 rows");

  auto accuracy = [&](const DataTable& t) {
    std::vector<double> proba = predict_proba(model, t);
    size_t hits = 0;
    for (size_t i = 0; i < proba.size(); ++i)
      hits += (proba[i] >= 0.5 ? 1 : 0) == t.y(i);
    return static_cast<double>(hits) / static_cast<double>(t.n_rows());
  };
  double base_acc = accuracy(table);

  constexpr int kShuffles = 5;
  ImportanceRanking ranking;
  for (size_t f = 0; f < table.n_features(); ++f) {
    double drop_sum = 0.0;
    for (int s = 0; s < kShuffles; ++s) {
      Rng rng(derive_seed(seed, f * kShuffles + static_cast<size_t>(s),
                          "importance_shuffle"));
      std::vector<size_t> perm(table.n_rows());
      std::iota(perm.begin(), perm.end(), size_t{0});
      shuffle(perm, rng);

      // Rebuild the table with column f permuted (missing markers move with
      // their values).
      std::vector<double> col(table.n_rows());
      for (size_t r = 0; r < table.n_rows(); ++r)
        col[r] = table.cell(perm[r], f);
      std::vector<std::vector<double>> cols;
      std::vector<std::vector<std::string>> cats;
      for (size_t c = 0; c < table.n_features(); ++c) {
        cols.push_back(c == f ? col : table.column(c));
        cats.push_back(table.categories(c));
      }
      DataTable permuted = DataTable::from_parts(
          table.schema(), std::move(cols), std::move(cats), table.group_raw(),
          table.y_raw(), table.yhat_raw());
      drop_sum += base_acc - accuracy(permuted);
    }
    double score = std::max(0.0, drop_sum / kShuffles);
    ranking.entries.emplace_back(table.schema().features[f].name, score);
  }
  std::stable_sort(ranking.entries.begin(), ranking.entries.end(),
                   [](const auto& a, const auto& b) { return a.second < b.second; });
  return ranking;
}

namespace {

using nlohmann::json;

json encoder_to_json(const FeatureEncoder& e) {
  json j;
  j["feature_names"] = e.feature_names;
  std::vector<std::string> kinds;
  for (FeatureKind k : e.feature_kinds)
    kinds.push_back(k == FeatureKind::Numeric ? "numeric" : "categorical");
  j["feature_kinds"] = kinds;
  j["categories"] = e.categories;
  j["numeric_impute"] = e.numeric_impute;
  j["mode_impute"] = e.mode_impute;
  j["imputation"] = e.policy == ImputationPolicy::MeanMode ? "mean_mode" : "zero";
  return j;
}

FeatureEncoder encoder_from_json(const json& j) {
  FeatureEncoder e;
  e.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  for (const auto& k : j.at("feature_kinds"))
    e.feature_kinds.push_back(k.get<std::string>() == "numeric"
                                  ? FeatureKind::Numeric
                                  : FeatureKind::Categorical);
  e.categories = j.at("categories").get<std::vector<std::vector<std::string>>>();
  e.numeric_impute = j.at("numeric_impute").get<std::vector<double>>();
  e.mode_impute = j.at("mode_impute").get<std::vector<int>>();
  e.policy = j.at("imputation").get<std::string>() == "zero"
                 ? ImputationPolicy::Zero
                 : ImputationPolicy::MeanMode;
  return e;
}

}  // namespace

void save_model(const TrainedModel& model, const std::string& path) {
  json j;
  j["format_version"] = 1;
  j["class"] = model_class_name(model.spec.model_class);
  j["hyperparameters"] = {
      {"learning_rate", model.spec.learning_rate},
      {"epochs", model.spec.epochs},
      {"n_stumps", model.spec.n_stumps},
      {"l2", model.spec.l2},
  };
  if (model.spec.dp_epsilon)
    j["hyperparameters"]["dp_epsilon"] = *model.spec.dp_epsilon;
  j["encoder"] = encoder_to_json(model.encoder);
  j["weights"] = model.weights;
  j["intercept"] = model.intercept;
  j["scale_min"] = model.scale_min;
  j["scale_max"] = model.scale_max;
  json stumps = json::array();
  for (const Stump& s : model.stumps)
    stumps.push_back({{"column", s.column},
                      {"threshold", s.threshold},
                      {"left_value", s.left_value},
                      {"right_value", s.right_value}});
  j["stumps"] = stumps;
  j["base_score"] = model.base_score;
  j["degenerate"] = model.degenerate;
  j["degenerate_label"] = model.degenerate_label;

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::IoError, "cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

TrainedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(Errc::IoError, std::string("model file parse error: ") + e.what());
  }
  if (j.value("format_version", 0) != 1)
    fail(Errc::IoError, "unsupported model format version");

  TrainedModel m;
  auto cls = model_class_from_name(j.at("class").get<std::string>());
  if (!cls) fail(Errc::IoError, "unknown model class in file");
  m.spec.model_class = *cls;
  const json& h = j.at("hyperparameters");
  m.spec.learning_rate = h.at("learning_rate").get<double>();
  m.spec.epochs = h.at("epochs").get<int>();
  m.spec.n_stumps = h.at("n_stumps").get<int>();
  m.spec.l2 = h.at("l2").get<double>();
  if (h.contains("dp_epsilon")) m.spec.dp_epsilon = h.at("dp_epsilon").get<double>();
  m.encoder = encoder_from_json(j.at("encoder"));
  m.spec.imputation = m.encoder.policy;
  m.weights = j.at("weights").get<std::vector<double>>();
  m.intercept = j.at("intercept").get<double>();
  m.scale_min = j.at("scale_min").get<std::vector<double>>();
  m.scale_max = j.at("scale_max").get<std::vector<double>>();
  for (const auto& s : j.at("stumps")) {
    Stump st;
    st.column = s.at("column").get<size_t>();
    st.threshold = s.at("threshold").get<double>();
    st.left_value = s.at("left_value").get<double>();
    st.right_value = s.at("right_value").get<double>();
    m.stumps.push_back(st);
  }
  m.base_score = j.at("base_score").get<double>();
  m.degenerate = j.at("degenerate").get<bool>();
  m.degenerate_label = j.at("degenerate_label").get<int>();
  return m;
}

}  // namespace auditbench
