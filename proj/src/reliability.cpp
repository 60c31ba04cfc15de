#include "auditbench/reliability.hpp"

#include <vector>

namespace auditbench {

const char* configuration_name(IntervalConfiguration c) {
  switch (c) {
    case IntervalConfiguration::NegativeDisparity: return "negative_disparity";
    case IntervalConfiguration::Parity: return "parity";
    case IntervalConfiguration::PositiveDisparity: return "positive_disparity";
  }
  return "?";
}

const char* outcome_name(AuditOutcome o) {
  switch (o) {
    case AuditOutcome::Accurate: return "accurate";
    case AuditOutcome::Type1: return "type1";
    case AuditOutcome::Type2: return "type2";
    case AuditOutcome::Reverse: return "reverse";
  }
  return "?";
}

IntervalConfiguration classify_configuration(const Interval& interval) {
  if (interval.lower > interval.upper)
    fail(Errc::InvalidInterval, "lower exceeds upper");
  if (interval.upper < 0.0) return IntervalConfiguration::NegativeDisparity;
  if (interval.lower > 0.0) return IntervalConfiguration::PositiveDisparity;
  return IntervalConfiguration::Parity;
}

AuditOutcome classify_outcome(IntervalConfiguration baseline,
                              IntervalConfiguration experiment) {
  if (baseline == experiment) return AuditOutcome::Accurate;
  if (baseline == IntervalConfiguration::Parity) return AuditOutcome::Type1;
  if (experiment == IntervalConfiguration::Parity) return AuditOutcome::Type2;
  return AuditOutcome::Reverse;
}

double overlap_proportion(const Interval& baseline,
                          std::span<const double> values) {
  if (values.empty())
    fail(Errc::EmptyValues, "overlap_proportion of empty value set");
  size_t inside = 0;
  for (double v : values) {
    if (v >= baseline.lower && v <= baseline.upper) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(values.size());
}

ReliabilityReport compare(const Interval& baseline,
                          std::span<const double> experimental_values,
                          size_t n_uncomputable) {
  ReliabilityReport report;
  report.baseline = baseline;
  report.baseline_config = classify_configuration(baseline);
  report.n_values = experimental_values.size();
  report.n_uncomputable = n_uncomputable;

  std::vector<double> values(experimental_values.begin(),
                             experimental_values.end());
  double alpha = 1.0 - baseline.level;
  report.experimental.lower = percentile(values, alpha / 2.0);
  report.experimental.upper = percentile(values, 1.0 - alpha / 2.0);
  report.experimental.level = baseline.level;
  report.experiment_config = classify_configuration(report.experimental);
  report.outcome = classify_outcome(report.baseline_config,
                                    report.experiment_config);
  report.overlap = overlap_proportion(baseline, experimental_values);
  return report;
}

}  // namespace auditbench
