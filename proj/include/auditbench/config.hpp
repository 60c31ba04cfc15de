#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "auditbench/dataset.hpp"
#include "auditbench/degrade.hpp"
#include "auditbench/metrics.hpp"
#include "auditbench/models.hpp"
#include "auditbench/synth.hpp"

namespace auditbench {

enum class Scenario { A, B, C };
enum class DisparityMode { Natural, Skewed };

const char* scenario_name(Scenario s);
const char* disparity_mode_name(DisparityMode m);

struct DatasetSource {
  enum class Kind { Benchmark, Csv };
  Kind kind = Kind::Benchmark;
  BenchmarkSpec benchmark;
  std::string csv_path;
  Schema schema;  // csv only

  size_t feature_count() const;
};

// The full description of one experiment run. Key names and semantics
// follow the config file format (see parse_config).
struct ExperimentConfig {
  DatasetSource dataset;
  ModelSpec model;
  Scenario scenario = Scenario::B;
  std::vector<Metric> metrics = {Metric::SPD, Metric::AOD, Metric::EOD};
  std::vector<double> subsample_grid;
  std::vector<size_t> features_grid;
  std::vector<double> missingness_grid;
  std::vector<double> epsilon_grid;
  std::vector<SynthesizerSpec> synthesizer_grid;
  DisparityMode disparity_mode = DisparityMode::Natural;
  int repetitions = 100;
  int bootstrap_B = 500;
  uint64_t master_seed = 0;

  // Collects every violated invariant, including the scenario/experiment
  // compatibility matrix. Empty means valid.
  std::vector<std::string> diagnostics() const;
  void validate() const;  // throws ConfigError with the first diagnostic
  std::string hash() const;
};

ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

}  // namespace auditbench
