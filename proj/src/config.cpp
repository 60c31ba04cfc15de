#include "auditbench/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace auditbench {

using nlohmann::json;

const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::A: return "A";
    case Scenario::B: return "B";
    case Scenario::C: return "C";
  }
  return "?";
}

const char* disparity_mode_name(DisparityMode m) {
  return m == DisparityMode::Natural ? "natural" : "skewed";
}

size_t DatasetSource::feature_count() const {
  if (kind == Kind::Benchmark)
    return benchmark.n_numeric_features + benchmark.n_categorical_features;
  return schema.features.size();
}

std::vector<std::string> ExperimentConfig::diagnostics() const {
  std::vector<std::string> out;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) out.push_back(msg);
  };

  try {
    if (dataset.kind == DatasetSource::Kind::Benchmark)
      dataset.benchmark.validate();
    else
      dataset.schema.validate();
  } catch (const AuditError& e) {
    out.push_back(e.what());
  }
  try {
    model.validate();
  } catch (const AuditError& e) {
    out.push_back(e.what());
  }

  check(!metrics.empty(), "metrics must name at least one of SPD, AOD, EOD");
  check(repetitions >= 1, "repetitions must be at least 1");
  check(bootstrap_B >= 1, "bootstrap_B must be at least 1");

  for (double f : subsample_grid)
    check(f > 0.0 && f <= 1.0, "grids.subsample entries must lie in (0,1]");
  for (double r : missingness_grid)
    check(r >= 0.0 && r <= 0.6, "grids.missingness entries must lie in [0,0.6]");
  for (double e : epsilon_grid)
    check(e > 0.0, "grids.epsilon entries must be positive");
  for (size_t k : features_grid)
    check(k <= dataset.feature_count(),
          "grids.features entries cannot exceed the dataset's feature count");
  for (const auto& s : synthesizer_grid) {
    try {
      s.validate();
    } catch (const AuditError& e) {
      out.push_back(e.what());
    }
  }

  // Scenario/experiment compatibility: DP aggregation applies only to
  // scenario A; feature, missingness, and synthesizer degradations apply
  // only to B and C; subsampling applies everywhere.
  if (scenario == Scenario::A) {
    check(!epsilon_grid.empty(),
          "scenario A requires a non-empty grids.epsilon");
    check(features_grid.empty(),
          "scenario A is incompatible with grids.features (missing features "
          "affect only scenarios B and C)");
    check(missingness_grid.empty(),
          "scenario A is incompatible with grids.missingness (missing values "
          "affect only scenarios B and C)");
    check(synthesizer_grid.empty(),
          "scenario A is incompatible with grids.synthesizers (synthetic "
          "data affects only scenarios B and C)");
  } else {
    check(epsilon_grid.empty(),
          "grids.epsilon (DP aggregation) applies only to scenario A");
  }
  return out;
}

void ExperimentConfig::validate() const {
  auto diags = diagnostics();
  if (!diags.empty()) fail(Errc::ConfigError, diags.front());
}

namespace {

json config_to_json(const ExperimentConfig& c) {
  json j;
  if (c.dataset.kind == DatasetSource::Kind::Benchmark) {
    const BenchmarkSpec& b = c.dataset.benchmark;
    j["dataset"] = {
        {"kind", "benchmark"},
        {"benchmark",
         {{"n_rows", b.n_rows},
          {"n_numeric_features", b.n_numeric_features},
          {"n_categorical_features", b.n_categorical_features},
          {"group_balance", b.group_balance},
          {"base_rate_privileged", b.base_rate_privileged},
          {"base_rate_underprivileged", b.base_rate_underprivileged},
          {"signal_strength", b.signal_strength},
          {"seed", b.seed}}},
    };
  } else {
    json feats = json::array();
    for (const auto& f : c.dataset.schema.features)
      feats.push_back({{"name", f.name},
                       {"kind", f.kind == FeatureKind::Numeric ? "numeric"
                                                               : "categorical"}});
    j["dataset"] = {
        {"kind", "csv"},
        {"path", c.dataset.csv_path},
        {"schema",
         {{"features", feats},
          {"group_column", c.dataset.schema.group_column},
          {"target_column", c.dataset.schema.target_column},
          {"prediction_column", c.dataset.schema.prediction_column},
          {"privileged_value", c.dataset.schema.privileged_value},
          {"underprivileged_value", c.dataset.schema.underprivileged_value},
          {"missing_token", c.dataset.schema.missing_token}}},
    };
  }
  j["model"] = {
      {"class", model_class_name(c.model.model_class)},
      {"learning_rate", c.model.learning_rate},
      {"epochs", c.model.epochs},
      {"n_stumps", c.model.n_stumps},
      {"l2", c.model.l2},
      {"imputation", c.model.imputation == ImputationPolicy::MeanMode
                         ? "mean_mode"
                         : "zero"},
  };
  if (c.model.dp_epsilon) j["model"]["dp_epsilon"] = *c.model.dp_epsilon;
  j["scenario"] = scenario_name(c.scenario);
  std::vector<std::string> metric_names;
  for (Metric m : c.metrics) metric_names.push_back(metric_name(m));
  j["metrics"] = metric_names;
  json synths = json::array();
  for (const auto& s : c.synthesizer_grid) {
    json sj = {{"kind", synth_kind_name(s.kind)}};
    if (s.kind == SynthKind::ChainBayesDp) {
      sj["epsilon"] = s.epsilon;
      sj["bins"] = s.bins;
    }
    synths.push_back(sj);
  }
  j["grids"] = {
      {"subsample", c.subsample_grid},  {"features", c.features_grid},
      {"missingness", c.missingness_grid}, {"epsilon", c.epsilon_grid},
      {"synthesizers", synths},
  };
  j["disparity_mode"] = disparity_mode_name(c.disparity_mode);
  j["repetitions"] = c.repetitions;
  j["bootstrap_B"] = c.bootstrap_B;
  j["master_seed"] = c.master_seed;
  return j;
}

}  // namespace

std::string ExperimentConfig::hash() const {
  // FNV-1a over the canonical (key-sorted) dump.
  std::string dump = config_to_json(*this).dump();
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : dump) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

ExperimentConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::ConfigError, std::string("config parse error: ") + e.what());
  }

  ExperimentConfig c;
  try {
    const json& ds = j.at("dataset");
    std::string kind = ds.at("kind").get<std::string>();
    if (kind == "benchmark") {
      c.dataset.kind = DatasetSource::Kind::Benchmark;
      const json& b = ds.at("benchmark");
      BenchmarkSpec& spec = c.dataset.benchmark;
      spec.n_rows = b.at("n_rows").get<size_t>();
      spec.n_numeric_features = b.value("n_numeric_features", size_t{4});
      spec.n_categorical_features = b.value("n_categorical_features", size_t{0});
      spec.group_balance = b.value("group_balance", 0.5);
      spec.base_rate_privileged = b.value("base_rate_privileged", 0.5);
      spec.base_rate_underprivileged = b.value("base_rate_underprivileged", 0.5);
      spec.signal_strength = b.value("signal_strength", 1.0);
      spec.seed = b.value("seed", uint64_t{0});
    } else if (kind == "csv") {
      c.dataset.kind = DatasetSource::Kind::Csv;
      c.dataset.csv_path = ds.at("path").get<std::string>();
      const json& s = ds.at("schema");
      Schema& schema = c.dataset.schema;
      for (const auto& f : s.at("features")) {
        FeatureSpec fs;
        fs.name = f.at("name").get<std::string>();
        std::string fk = f.at("kind").get<std::string>();
        if (fk != "numeric" && fk != "categorical")
          fail(Errc::ConfigError, "feature kind must be numeric or categorical");
        fs.kind = fk == "numeric" ? FeatureKind::Numeric : FeatureKind::Categorical;
        schema.features.push_back(fs);
      }
      schema.group_column = s.at("group_column").get<std::string>();
      schema.target_column = s.at("target_column").get<std::string>();
      schema.prediction_column = s.value("prediction_column", std::string());
      schema.privileged_value = s.at("privileged_value").get<std::string>();
      schema.underprivileged_value = s.at("underprivileged_value").get<std::string>();
      schema.missing_token = s.value("missing_token", std::string());
    } else {
      fail(Errc::ConfigError, "dataset.kind must be 'benchmark' or 'csv'");
    }

    const json& m = j.at("model");
    auto cls = model_class_from_name(m.at("class").get<std::string>());
    if (!cls) fail(Errc::ConfigError, "unknown model.class");
    c.model.model_class = *cls;
    c.model.learning_rate = m.value("learning_rate", 0.5);
    c.model.epochs = m.value("epochs", 200);
    c.model.n_stumps = m.value("n_stumps", 50);
    c.model.l2 = m.value("l2", 0.0);
    if (m.contains("dp_epsilon"))
      c.model.dp_epsilon = m.at("dp_epsilon").get<double>();
    std::string imp = m.value("imputation", std::string("mean_mode"));
    if (imp != "mean_mode" && imp != "zero")
      fail(Errc::ConfigError, "model.imputation must be mean_mode or zero");
    c.model.imputation =
        imp == "zero" ? ImputationPolicy::Zero : ImputationPolicy::MeanMode;

    std::string sc = j.at("scenario").get<std::string>();
    if (sc == "A") c.scenario = Scenario::A;
    else if (sc == "B") c.scenario = Scenario::B;
    else if (sc == "C") c.scenario = Scenario::C;
    else fail(Errc::ConfigError, "scenario must be A, B, or C");

    c.metrics.clear();
    for (const auto& name : j.value("metrics", std::vector<std::string>{
                                                   "SPD", "AOD", "EOD"})) {
      auto metric = metric_from_name(name);
      if (!metric) fail(Errc::ConfigError, "unknown metric '" + name + "'");
      c.metrics.push_back(*metric);
    }

    if (j.contains("grids")) {
      const json& g = j.at("grids");
      c.subsample_grid = g.value("subsample", std::vector<double>{});
      c.features_grid = g.value("features", std::vector<size_t>{});
      c.missingness_grid = g.value("missingness", std::vector<double>{});
      c.epsilon_grid = g.value("epsilon", std::vector<double>{});
      if (g.contains("synthesizers")) {
        for (const auto& s : g.at("synthesizers")) {
          SynthesizerSpec spec;
          auto kind2 = synth_kind_from_name(s.at("kind").get<std::string>());
          if (!kind2) fail(Errc::ConfigError, "unknown synthesizer kind");
          spec.kind = *kind2;
          spec.epsilon = s.value("epsilon", 1.0);
          spec.bins = s.value("bins", 10);
          c.synthesizer_grid.push_back(spec);
        }
      }
    }

    std::string dm = j.value("disparity_mode", std::string("natural"));
    if (dm != "natural" && dm != "skewed")
      fail(Errc::ConfigError, "disparity_mode must be natural or skewed");
    c.disparity_mode =
        dm == "skewed" ? DisparityMode::Skewed : DisparityMode::Natural;
    c.repetitions = j.value("repetitions", 100);
    c.bootstrap_B = j.value("bootstrap_B", 500);
    c.master_seed = j.value("master_seed", uint64_t{0});
  } catch (const json::exception& e) {
    fail(Errc::ConfigError, std::string("config structure error: ") + e.what());
  }
  return c;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace auditbench
