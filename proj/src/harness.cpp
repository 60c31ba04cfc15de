#include "auditbench/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <map>
#include <mutex>
#include <thread>

#include "auditbench/privacy.hpp"
#include "auditbench/rng.hpp"

namespace auditbench {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// One grid entry of the scenario's condition list.
struct Condition {
  std::string experiment;
  std::string label;
  std::optional<DegradationSpec> degradation;  // scenarios B/C
  std::optional<SynthesizerSpec> synthesizer;  // scenarios B/C
  double epsilon = 0.0;                        // scenario A
  double dp_subsample = 1.0;                   // scenario A
};

std::vector<Condition> build_conditions(const ExperimentConfig& cfg) {
  std::vector<Condition> out;
  if (cfg.scenario == Scenario::A) {
    std::vector<double> subs = cfg.subsample_grid;
    if (subs.empty()) subs.push_back(1.0);
    for (double s : subs) {
      for (double eps : cfg.epsilon_grid) {
        Condition c;
        c.experiment = "dp";
        c.epsilon = eps;
        c.dp_subsample = s;
        c.label = s < 1.0 ? "subsample=" + format_double(s) +
                                ";epsilon=" + format_double(eps)
                          : "epsilon=" + format_double(eps);
        out.push_back(c);
      }
    }
    return out;
  }

  for (double f : cfg.subsample_grid) {
    Condition c;
    c.experiment = "subsample";
    DegradationSpec d;
    d.kind = DegradationSpec::Kind::Subsample;
    d.fraction = f;
    c.degradation = d;
    c.label = d.label();
    out.push_back(c);
  }
  for (size_t k : cfg.features_grid) {
    Condition c;
    c.experiment = "features";
    DegradationSpec d;
    d.kind = DegradationSpec::Kind::DropWeakestFeatures;
    d.drop_count = k;
    c.degradation = d;
    c.label = d.label();
    out.push_back(c);
  }
  for (double r : cfg.missingness_grid) {
    Condition c;
    c.experiment = "missingness";
    DegradationSpec d;
    d.kind = DegradationSpec::Kind::DisparateMissingness;
    d.rate = r;
    c.degradation = d;
    c.label = d.label();
    out.push_back(c);
  }
  for (const SynthesizerSpec& s : cfg.synthesizer_grid) {
    Condition c;
    c.experiment = "synth";
    c.synthesizer = s;
    c.label = s.label();
    out.push_back(c);
  }
  if (out.empty()) {
    // No degradation grid: a single identity condition, whose values equal
    // the baseline's exactly.
    Condition c;
    c.experiment = "none";
    c.label = "none";
    out.push_back(c);
  }
  return out;
}

bool is_skippable(Errc code) {
  switch (code) {
    case Errc::UndefinedRate:
    case Errc::TooManyDegenerate:
    case Errc::EmptyGroup:
    case Errc::EmptyResult:
    case Errc::NoPositivePredictions:
    case Errc::TooFewRows:
      return true;
    default:
      return false;
  }
}

// Appends one record per metric for a prepared audit table (predictions
// present): the point estimate plus bootstrap values, or skip records when
// rates are undefined.
void eval_with_bootstrap(const ExperimentConfig& cfg, int rep,
                         const std::string& experiment,
                         const std::string& label, const DataTable& table,
                         uint64_t bootstrap_seed,
                         std::vector<ValueRecord>& records) {
  auto skip_all = [&](const std::string& reason) {
    for (Metric m : cfg.metrics) {
      ValueRecord r;
      r.experiment = experiment;
      r.condition = label;
      r.repetition = rep;
      r.metric = m;
      r.skipped = true;
      r.skip_reason = reason;
      records.push_back(std::move(r));
    }
  };

  MultiBootstrap mb;
  GroupedConfusion grouped;
  try {
    mb = bootstrap_values(table, cfg.metrics, cfg.bootstrap_B, bootstrap_seed);
    grouped = confusion_by_group(table);
  } catch (const AuditError& e) {
    if (is_skippable(e.code())) {
      skip_all(errc_name(e.code()));
      return;
    }
    throw;
  }

  for (Metric m : cfg.metrics) {
    ValueRecord r;
    r.experiment = experiment;
    r.condition = label;
    r.repetition = rep;
    r.metric = m;
    auto point = try_parity_metric(grouped, m);
    int dropped = mb.dropped[m];
    if (!point) {
      r.skipped = true;
      r.skip_reason = errc_name(Errc::UndefinedRate);
    } else if (dropped > 0.2 * cfg.bootstrap_B) {
      r.skipped = true;
      r.skip_reason = errc_name(Errc::TooManyDegenerate);
    } else {
      r.point = *point;
      r.bootstrap = mb.values[m];
      r.n_dropped_resamples = dropped;
    }
    records.push_back(std::move(r));
  }
}

struct RepOutput {
  std::vector<ValueRecord> records;
  std::vector<std::string> provenance;
};

RepOutput run_repetition(const ExperimentConfig& cfg, const DataTable& full,
                         int rep, const std::vector<Condition>& conditions) {
  RepOutput out;
  uint64_t seed = cfg.master_seed;
  uint64_t urep = static_cast<uint64_t>(rep);
  uint64_t bootstrap_seed = derive_seed(seed, urep, "bootstrap");

  SplitSpec split_spec{0.7, derive_seed(seed, urep, "split")};
  auto [train_tbl, audit_tbl] = split(full, split_spec);
  TrainedModel model = train(cfg.model, train_tbl, derive_seed(seed, urep, "train"));
  DataTable audit = predict(model, audit_tbl);
  if (cfg.disparity_mode == DisparityMode::Skewed)
    audit = skew_disparity(audit, 0.95, derive_seed(seed, urep, "skew"));

  out.provenance.push_back(
      "rep=" + std::to_string(rep) +
      " split_seed=" + std::to_string(split_spec.seed) +
      " train_rows=" + std::to_string(train_tbl.n_rows()) +
      " audit_rows=" + std::to_string(audit.n_rows()));

  // Baseline values are recorded before any degradation runs.
  eval_with_bootstrap(cfg, rep, "baseline", "none", audit, bootstrap_seed,
                      out.records);

  bool needs_ranking = false;
  for (const Condition& c : conditions) {
    if (c.degradation &&
        (c.degradation->kind == DegradationSpec::Kind::DropWeakestFeatures ||
         c.degradation->kind == DegradationSpec::Kind::DisparateMissingness))
      needs_ranking = true;
  }
  ImportanceRanking ranking;
  if (needs_ranking)
    ranking = feature_importance(model, train_tbl,
                                 derive_seed(seed, urep, "importance"));

  for (const Condition& cond : conditions) {
    auto skip_all = [&](const std::string& reason) {
      for (Metric m : cfg.metrics) {
        ValueRecord r;
        r.experiment = cond.experiment;
        r.condition = cond.label;
        r.repetition = rep;
        r.metric = m;
        r.skipped = true;
        r.skip_reason = reason;
        out.records.push_back(std::move(r));
      }
    };

    if (cfg.scenario == Scenario::A) {
      try {
        DataTable t = cond.dp_subsample < 1.0
                          ? subsample(audit, cond.dp_subsample,
                                      derive_seed(seed, urep,
                                                  "dp_subsample:" + cond.label))
                          : audit;
        GroupedConfusion grouped = confusion_by_group(t);
        LaplaceParams params;
        params.epsilon = cond.epsilon;
        params.sensitivity = 1.0;
        params.seed = derive_seed(seed, urep, "laplace:" + cond.label);
        NoisyGroupedConfusion noisy = postprocess(
            laplace_release(grouped, params), PostprocessPolicy::ClampZero);
        for (Metric m : cfg.metrics) {
          ValueRecord r;
          r.experiment = cond.experiment;
          r.condition = cond.label;
          r.repetition = rep;
          r.metric = m;
          auto v = try_metric_from_noisy(noisy, m);
          if (v) {
            r.point = *v;
          } else {
            r.skipped = true;
            r.skip_reason = errc_name(Errc::UndefinedRate);
          }
          out.records.push_back(std::move(r));
        }
      } catch (const AuditError& e) {
        if (!is_skippable(e.code())) throw;
        skip_all(errc_name(e.code()));
      }
      continue;
    }

    // Scenarios B and C: degrade or synthesize before querying any model.
    try {
      DataTable degraded = audit.without_predictions();
      if (cond.degradation) {
        degraded = cond.degradation->apply(
            degraded, ranking, derive_seed(seed, urep, "degrade:" + cond.label));
      } else if (cond.synthesizer) {
        FittedSynthesizer fitted =
            fit(*cond.synthesizer, degraded,
                derive_seed(seed, urep, "synthfit:" + cond.label));
        degraded = fitted.sample(
            degraded.n_rows(), derive_seed(seed, urep, "synthsample:" + cond.label));
      }

      DataTable evaluated = [&] {
        if (cfg.scenario == Scenario::B) return predict(model, degraded);
        // Scenario C: the auditor re-splits and trains a replica from the
        // model spec alone; the original model's parameters are never read.
        SplitSpec replica_split{
            0.7, derive_seed(seed, urep, "replica_split:" + cond.label)};
        auto [replica_train_tbl, replica_audit] = split(degraded, replica_split);
        TrainedModel replica =
            train(cfg.model, replica_train_tbl,
                  derive_seed(seed, urep, "replica_train:" + cond.label));
        return predict(replica, replica_audit);
      }();

      eval_with_bootstrap(cfg, rep, cond.experiment, cond.label, evaluated,
                          bootstrap_seed, out.records);
    } catch (const AuditError& e) {
      if (!is_skippable(e.code())) throw;
      skip_all(errc_name(e.code()));
    }
  }

  if (cfg.scenario == Scenario::C)
    out.provenance.push_back(
        "rep=" + std::to_string(rep) +
        " scenario_c_replica=trained-from-spec-only (original model "
        "parameters not accessed)");
  return out;
}

}  // namespace

DataTable load_dataset(const ExperimentConfig& config) {
  if (config.dataset.kind == DatasetSource::Kind::Benchmark)
    return generate_benchmark(config.dataset.benchmark);
  return load_csv(config.dataset.csv_path, config.dataset.schema);
}

BaselineRun run_baseline(const ExperimentConfig& config, const DataTable& full,
                         int repetition) {
  uint64_t seed = config.master_seed;
  uint64_t urep = static_cast<uint64_t>(repetition);
  SplitSpec split_spec{0.7, derive_seed(seed, urep, "split")};
  auto [train_tbl, audit_tbl] = split(full, split_spec);

  TrainedModel model =
      train(config.model, train_tbl, derive_seed(seed, urep, "train"));
  DataTable audit = predict(model, audit_tbl);
  if (config.disparity_mode == DisparityMode::Skewed)
    audit = skew_disparity(audit, 0.95, derive_seed(seed, urep, "skew"));
  MultiBootstrap bootstrap =
      bootstrap_values(audit, config.metrics, config.bootstrap_B,
                       derive_seed(seed, urep, "bootstrap"));
  return BaselineRun{std::move(model), std::move(audit), std::move(bootstrap)};
}

ExperimentResult run_experiment(const ExperimentConfig& config, int jobs) {
  config.validate();
  if (jobs < 1) fail(Errc::ConfigError, "jobs must be at least 1");

  DataTable full = load_dataset(config);
  for (size_t k : config.features_grid) {
    if (k > full.n_features())
      fail(Errc::ConfigError,
           "grids.features entry exceeds the dataset's feature count");
  }
  std::vector<Condition> conditions = build_conditions(config);

  int reps = config.repetitions;
  std::vector<RepOutput> outputs(static_cast<size_t>(reps));
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      int rep = next.fetch_add(1);
      if (rep >= reps) return;
      try {
        outputs[static_cast<size_t>(rep)] =
            run_repetition(config, full, rep, conditions);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  int n_threads = std::min(jobs, reps);
  std::vector<std::thread> pool;
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  ExperimentResult result;
  result.config = config;
  result.config_hash = config.hash();
  result.provenance.push_back("config_hash=" + result.config_hash);
  result.provenance.push_back("master_seed=" + std::to_string(config.master_seed));
  result.provenance.push_back("scenario=" +
                              std::string(scenario_name(config.scenario)));
  // Deterministic fold in repetition order, regardless of completion order.
  for (auto& rep_out : outputs) {
    for (auto& rec : rep_out.records) result.records.push_back(std::move(rec));
    for (auto& line : rep_out.provenance)
      result.provenance.push_back(std::move(line));
  }

  size_t expected = static_cast<size_t>(reps) * (1 + conditions.size()) *
                    config.metrics.size();
  if (result.records.size() != expected)
    fail(Errc::ConfigError,
         "internal accounting error: expected " + std::to_string(expected) +
             " records, produced " + std::to_string(result.records.size()));
  return result;
}

namespace {

ExperimentResult run_for_scenario(const ExperimentConfig& config, Scenario s,
                                  int jobs) {
  if (config.scenario != s)
    fail(Errc::ConfigError, std::string("config names scenario ") +
                                scenario_name(config.scenario) +
                                " but scenario " + scenario_name(s) +
                                " was requested");
  return run_experiment(config, jobs);
}

}  // namespace

ExperimentResult run_scenario_a(const ExperimentConfig& config, int jobs) {
  return run_for_scenario(config, Scenario::A, jobs);
}
ExperimentResult run_scenario_b(const ExperimentConfig& config, int jobs) {
  return run_for_scenario(config, Scenario::B, jobs);
}
ExperimentResult run_scenario_c(const ExperimentConfig& config, int jobs) {
  return run_for_scenario(config, Scenario::C, jobs);
}

std::vector<SummaryRow> aggregate(const std::vector<ExperimentResult>& results) {
  if (results.empty()) fail(Errc::EmptyValues, "no results to aggregate");
  for (const auto& r : results) {
    if (r.config_hash != results.front().config_hash)
      fail(Errc::MixedConfigs, "results come from different configs");
  }
  const ExperimentConfig& cfg = results.front().config;

  // Pooled baseline interval per metric.
  std::map<Metric, std::vector<double>> baseline_values;
  for (const auto& res : results) {
    for (const auto& rec : res.records) {
      if (rec.experiment != "baseline" || rec.skipped) continue;
      auto& dst = baseline_values[rec.metric];
      dst.insert(dst.end(), rec.bootstrap.begin(), rec.bootstrap.end());
    }
  }
  std::map<Metric, Interval> baseline_interval;
  for (auto& [m, values] : baseline_values) {
    if (values.empty()) continue;
    Interval iv;
    iv.lower = percentile(values, 0.025);
    iv.upper = percentile(values, 0.975);
    iv.level = 0.95;
    baseline_interval[m] = iv;
  }

  // Pool experimental values per (experiment, condition, metric), keeping
  // first-appearance order.
  struct Key {
    std::string experiment, condition;
    Metric metric;
    bool operator==(const Key&) const = default;
  };
  std::vector<Key> order;
  struct Pool {
    std::vector<double> values;
    size_t n_skipped = 0;
  };
  std::map<std::pair<std::string, int>, Pool> pools;  // (exp|cond, metric)
  auto pool_key = [](const Key& k) {
    return std::make_pair(k.experiment + "\x1f" + k.condition,
                          static_cast<int>(k.metric));
  };

  for (const auto& res : results) {
    for (const auto& rec : res.records) {
      Key key{rec.experiment, rec.condition, rec.metric};
      auto pk = pool_key(key);
      auto it = pools.find(pk);
      if (it == pools.end()) {
        order.push_back(key);
        it = pools.emplace(pk, Pool{}).first;
      }
      Pool& pool = it->second;
      if (rec.skipped) {
        ++pool.n_skipped;
        continue;
      }
      pool.n_skipped += static_cast<size_t>(rec.n_dropped_resamples);
      if (rec.bootstrap.empty()) {
        pool.values.push_back(rec.point);
      } else {
        pool.values.insert(pool.values.end(), rec.bootstrap.begin(),
                           rec.bootstrap.end());
      }
    }
  }

  std::vector<SummaryRow> rows;
  for (const Key& key : order) {
    const Pool& pool = pools.at(pool_key(key));
    SummaryRow row;
    row.scenario = scenario_name(cfg.scenario);
    row.experiment = key.experiment;
    row.condition = key.condition;
    row.metric = metric_name(key.metric);
    row.disparity_mode = disparity_mode_name(cfg.disparity_mode);
    row.n_values = pool.values.size();
    row.n_skipped = pool.n_skipped;
    auto it = baseline_interval.find(key.metric);
    if (it != baseline_interval.end()) {
      row.baseline = it->second;
      if (!pool.values.empty())
        row.report = compare(it->second, pool.values, pool.n_skipped);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace auditbench
