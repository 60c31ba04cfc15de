#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "auditbench/dataset.hpp"

namespace auditbench {

enum class Metric { SPD, AOD, EOD };

const char* metric_name(Metric m);
std::optional<Metric> metric_from_name(std::string_view name);

// Cells are reals so the same arithmetic serves exact counts and
// noise-perturbed releases.
struct ConfusionMatrix {
  double tp = 0, fp = 0, fn = 0, tn = 0;
  double total() const { return tp + fp + fn + tn; }
};

struct GroupedConfusion {
  ConfusionMatrix underprivileged;
  ConfusionMatrix privileged;
};

struct Interval {
  double lower = 0;
  double upper = 0;
  double level = 0.95;
  double width() const { return upper - lower; }
};

struct MetricEstimate {
  Metric metric = Metric::SPD;
  double value = 0;
  std::optional<Interval> interval;
};

// Tallies per-group confusion counts. Requires predictions and at least one
// row in each group.
GroupedConfusion confusion_by_group(const DataTable& table);

// Parity metric on exact or real-valued cells; underprivileged minus
// privileged sign convention. Returns nullopt when a needed denominator is
// not positive, i.e. the metric is not computable on this sample.
std::optional<double> try_parity_metric(const GroupedConfusion& grouped,
                                        Metric metric);

// Throwing wrapper around try_parity_metric (UndefinedRate).
MetricEstimate parity_metric(const GroupedConfusion& grouped, Metric metric);

// Linear-interpolation percentile of an unsorted sample, p in [0,1].
double percentile(std::vector<double> values, double p);

struct BootstrapResult {
  MetricEstimate estimate;      // point value + percentile interval
  std::vector<double> values;   // the computable resample values
  int n_dropped = 0;            // resamples with an undefined rate
};

// Multi-metric bootstrap core: B resamples with replacement of full rows,
// each resample's stream derived from (seed, resample index) so execution
// order cannot influence results.
struct MultiBootstrap {
  std::map<Metric, std::vector<double>> values;
  std::map<Metric, int> dropped;
};
MultiBootstrap bootstrap_values(const DataTable& table,
                                std::span<const Metric> metrics, int B,
                                uint64_t seed);

// Percentile bootstrap interval at the given level. Resamples with an
// undefined rate are dropped; more than 20% dropped aborts with
// TooManyDegenerate.
BootstrapResult bootstrap_ci(const DataTable& table, Metric metric, int B,
                             double level, uint64_t seed);

}  // namespace auditbench
