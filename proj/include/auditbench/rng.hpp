#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace auditbench {

// Deterministic random stream. All distribution transforms are implemented
// here (rather than via std:: distributions) so that a given seed produces
// the same draws on every standard library implementation.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
  }

  // Uniform integer in [0, n). n must be > 0.
  uint64_t below(uint64_t n);

  bool bernoulli(double p) { return uniform01() < p; }

  // Standard normal via Box-Muller. Consumes two uniforms per call; the
  // second Box-Muller value is discarded to keep the stream stateless.
  double normal();

  // Laplace(0, scale) via inverse CDF.
  double laplace(double scale);

 private:
  std::mt19937_64 gen_;
};

// Stable seed derivation for (master seed, index, stage tag) triples.
// Adding new stage tags never perturbs the streams of existing ones.
uint64_t derive_seed(uint64_t master, uint64_t index, std::string_view stage);

// k distinct indices drawn uniformly from [0, n), returned in ascending
// order so that selections preserve source order.
std::vector<size_t> sample_without_replacement(size_t n, size_t k, Rng& rng);

// In-place Fisher-Yates shuffle.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace auditbench
