#pragma once

#include <optional>

#include "auditbench/metrics.hpp"

namespace auditbench {

struct LaplaceParams {
  double epsilon = 1.0;
  double sensitivity = 1.0;  // fixed at 1 for disjoint count cells
  uint64_t seed = 0;

  void validate() const;
};

enum class PostprocessPolicy { None, ClampZero };

struct NoisyGroupedConfusion {
  ConfusionMatrix underprivileged;
  ConfusionMatrix privileged;
  LaplaceParams params;
};

// Adds independent Laplace(sensitivity/epsilon) noise to each of the 8
// cells. Each individual occupies exactly one cell of the disjoint
// group-by-outcome partition, so parallel composition prices the whole
// release at epsilon.
NoisyGroupedConfusion laplace_release(const GroupedConfusion& grouped,
                                      const LaplaceParams& params);

// Data-independent post-processing; preserves the DP guarantee.
NoisyGroupedConfusion postprocess(const NoisyGroupedConfusion& noisy,
                                  PostprocessPolicy policy);

// Same formulas as parity_metric, on real-valued cells, with the result
// clamped to [-1, 1]. Any needed denominator below 1 yields nullopt: the
// draw is reported as uncomputable rather than floored.
std::optional<double> try_metric_from_noisy(const NoisyGroupedConfusion& noisy,
                                            Metric metric);

MetricEstimate metric_from_noisy(const NoisyGroupedConfusion& noisy,
                                 Metric metric);

}  // namespace auditbench
