#pragma once

#include <span>
#include <string>

#include "auditbench/metrics.hpp"

namespace auditbench {

// Where an interval sits relative to parity (0). Endpoints are inclusive:
// an interval touching 0 counts as Parity.
enum class IntervalConfiguration { NegativeDisparity, Parity, PositiveDisparity };

enum class AuditOutcome { Accurate, Type1, Type2, Reverse };

const char* configuration_name(IntervalConfiguration c);
const char* outcome_name(AuditOutcome o);

IntervalConfiguration classify_configuration(const Interval& interval);

// Total over all configuration pairs: equal configs are Accurate, baseline
// parity with experimental disparity is Type1, the converse is Type2, and
// opposite-sign disparities are Reverse.
AuditOutcome classify_outcome(IntervalConfiguration baseline,
                              IntervalConfiguration experiment);

// Fraction of experimental values falling inside the closed baseline
// interval.
double overlap_proportion(const Interval& baseline,
                          std::span<const double> values);

struct ReliabilityReport {
  Interval baseline;
  Interval experimental;
  IntervalConfiguration baseline_config = IntervalConfiguration::Parity;
  IntervalConfiguration experiment_config = IntervalConfiguration::Parity;
  AuditOutcome outcome = AuditOutcome::Accurate;
  double overlap = 0.0;
  size_t n_values = 0;
  size_t n_uncomputable = 0;
};

// Builds the full baseline-vs-experiment comparison. The experimental
// interval is the percentile interval (at the baseline's level) of the
// pooled experimental values.
ReliabilityReport compare(const Interval& baseline,
                          std::span<const double> experimental_values,
                          size_t n_uncomputable);

}  // namespace auditbench
