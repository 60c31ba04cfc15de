#pragma once

#include <string>
#include <vector>

#include "auditbench/harness.hpp"

namespace auditbench {

// results.csv columns, exact order:
//   scenario,experiment,condition,repetition,metric,disparity_mode,value,
//   kind,skipped,skip_reason
// One row per point estimate (kind=point) and per bootstrap value
// (kind=bootstrap); skip records appear as a single point row with an empty
// value.
void write_results_csv(const ExperimentResult& result, const std::string& path);

// summary.csv columns, exact order:
//   scenario,experiment,condition,metric,disparity_mode,baseline_lower,
//   baseline_upper,baseline_config,experiment_config,outcome,
//   overlap_proportion,n_values,n_skipped
void write_summary_csv(const std::vector<SummaryRow>& rows,
                       const std::string& path);

void write_provenance(const ExperimentResult& result, const std::string& path,
                      bool with_timestamp = true);

// Loaded back from a results directory by the report command.
struct LoadedResults {
  std::vector<SummaryRow> summary;
  // Long-format experimental values: (experiment, condition, metric, value).
  struct PlotValue {
    std::string experiment, condition, metric;
    double value;
  };
  std::vector<PlotValue> values;
};

LoadedResults load_results_dir(const std::string& dir);

// Renders one table per experiment (overlap proportion by condition and
// metric) in Markdown or CSV, plus long-format plot data with the baseline
// interval attached to every value row.
void write_report(const LoadedResults& loaded, const std::string& dir,
                  const std::string& format);

}  // namespace auditbench
