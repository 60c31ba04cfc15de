#pragma once

#include <optional>
#include <string>
#include <vector>

#include "auditbench/config.hpp"
#include "auditbench/reliability.hpp"

namespace auditbench {

// One (experiment, condition, repetition, metric) cell of a run: either a
// point estimate plus its bootstrap values, or an explicit skip record.
struct ValueRecord {
  std::string experiment;  // baseline|none|subsample|features|missingness|synth|dp
  std::string condition;   // e.g. "subsample=0.2", "none"
  int repetition = 0;
  Metric metric = Metric::SPD;
  bool skipped = false;
  std::string skip_reason;
  double point = 0.0;
  std::vector<double> bootstrap;  // empty for scenario A releases
  int n_dropped_resamples = 0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::string config_hash;
  std::vector<ValueRecord> records;     // repetition-major, stable order
  std::vector<std::string> provenance;  // deterministic lines
};

struct BaselineRun {
  TrainedModel model;
  DataTable audit;  // with predictions, group labels skewed if configured
  MultiBootstrap bootstrap;
};

DataTable load_dataset(const ExperimentConfig& config);

// The baseline audit for one repetition: 70/30 split under the derived
// seed, train on the first part, predict the second, apply the disparity
// skew when configured, then bootstrap every metric.
BaselineRun run_baseline(const ExperimentConfig& config,
                         const DataTable& full, int repetition);

// Full runs. `jobs` parallelizes over repetitions; results are identical
// for any job count.
ExperimentResult run_experiment(const ExperimentConfig& config, int jobs = 1);
ExperimentResult run_scenario_a(const ExperimentConfig& config, int jobs = 1);
ExperimentResult run_scenario_b(const ExperimentConfig& config, int jobs = 1);
ExperimentResult run_scenario_c(const ExperimentConfig& config, int jobs = 1);

struct SummaryRow {
  std::string scenario;
  std::string experiment;
  std::string condition;
  std::string metric;
  std::string disparity_mode;
  std::optional<Interval> baseline;
  std::optional<ReliabilityReport> report;
  size_t n_values = 0;
  size_t n_skipped = 0;  // skip records plus dropped resamples
};

// Pools records across results (which must share a config hash) into one
// summary row per (experiment, condition, metric). Overlap proportions are
// computed over the pooled experimental value multiset; the baseline
// interval is the percentile interval of the pooled baseline bootstrap
// values across repetitions.
std::vector<SummaryRow> aggregate(const std::vector<ExperimentResult>& results);

}  // namespace auditbench
