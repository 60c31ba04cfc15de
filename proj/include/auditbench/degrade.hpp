#pragma once

#include <cstdint>
#include <string>

#include "auditbench/dataset.hpp"
#include "auditbench/models.hpp"

namespace auditbench {

// round(fraction * n) rows without replacement, source order preserved.
// fraction = 1 is the identity.
DataTable subsample(const DataTable& table, double fraction, uint64_t seed);

// Removes the k lowest-importance features (cumulative: k covers ranks
// 1..k weakest).
DataTable drop_weakest_features(const DataTable& table, size_t k,
                                const ImportanceRanking& ranking);

// For each of the m most important features independently, sets exactly
// floor(rate * #underprivileged rows) cells to MISSING, uniformly among
// underprivileged rows. Privileged rows are untouched.
DataTable inject_missingness(const DataTable& table, double rate,
                             const ImportanceRanking& ranking, size_t m,
                             uint64_t seed);

// Reassigns round(share * P) of the positive-prediction rows (uniformly
// chosen) to the underprivileged group and the remaining positives to the
// privileged group. Rows with yhat = 0 keep their groups; everything but
// the group column is untouched.
DataTable skew_disparity(const DataTable& table, double share, uint64_t seed);

// One tagged data-quality-loss condition of an experiment grid.
struct DegradationSpec {
  enum class Kind { Subsample, DropWeakestFeatures, DisparateMissingness };
  Kind kind = Kind::Subsample;
  double fraction = 1.0;   // Subsample
  size_t drop_count = 0;   // DropWeakestFeatures
  double rate = 0.0;       // DisparateMissingness
  size_t top_features = 5; // DisparateMissingness

  void validate() const;
  std::string label() const;
  DataTable apply(const DataTable& table, const ImportanceRanking& ranking,
                  uint64_t seed) const;
};

}  // namespace auditbench
