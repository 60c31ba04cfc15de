#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "auditbench/dataset.hpp"

namespace auditbench {

enum class SynthKind { IndependentMarginals, GaussianCopula, ChainBayesDp };

const char* synth_kind_name(SynthKind k);
std::optional<SynthKind> synth_kind_from_name(std::string_view name);

struct SynthesizerSpec {
  SynthKind kind = SynthKind::IndependentMarginals;
  double epsilon = 1.0;  // ChainBayesDp only
  int bins = 10;         // ChainBayesDp only
  uint64_t seed = 0;

  void validate() const;
  std::string label() const;
};

// One modeled column: a schema feature, or the group/target column treated
// as a binary categorical.
struct SynthColumn {
  std::string name;
  bool numeric = false;
  std::vector<double> sorted_values;  // numeric: observed values, ascending
  std::vector<double> cat_freq;       // categorical: normalized frequencies

  // ChainBayesDp discretization.
  std::vector<double> bin_edges;            // numeric: bins+1 edges
  std::vector<std::pair<size_t, size_t>> bin_slices;  // [start,end) into sorted_values
  size_t n_bins() const {
    return numeric ? (bin_edges.empty() ? 0 : bin_edges.size() - 1)
                   : cat_freq.size();
  }
};

struct ChainEdge {
  size_t parent = 0;  // modeled-column indexes
  size_t child = 0;
  std::vector<double> conditional;  // rows = parent bin, normalized
  double table_epsilon = 0.0;       // budget consumed by this release
};

// A synthesizer fitted on a table. Group and y are modeled as ordinary
// columns; the prediction column is never modeled.
class FittedSynthesizer {
 public:
  const SynthesizerSpec& spec() const { return spec_; }

  DataTable sample(size_t n, uint64_t seed) const;

  // ChainBayesDp: total Laplace budget consumed across released tables.
  double total_privacy_budget() const;

  void save(const std::string& path) const;
  static FittedSynthesizer load(const std::string& path);

  friend FittedSynthesizer fit(const SynthesizerSpec&, const DataTable&,
                               uint64_t);

 private:
  SynthesizerSpec spec_;
  Schema schema_;  // source schema minus predictions
  std::vector<std::vector<std::string>> categories_;  // per schema feature
  std::vector<SynthColumn> columns_;  // schema features, then group, then y

  // GaussianCopula state.
  std::vector<double> correlation_;  // d x d, repaired to PSD
  std::vector<double> chol_;         // lower Cholesky factor

  // ChainBayesDp state.
  size_t chain_root_ = 0;
  std::vector<double> root_marginal_;
  std::vector<ChainEdge> edges_;
};

// Learns marginals (and dependence structure, per kind) from the table.
// Requires at least 50 rows; the prediction column is excluded.
FittedSynthesizer fit(const SynthesizerSpec& spec, const DataTable& table,
                      uint64_t seed);

}  // namespace auditbench
