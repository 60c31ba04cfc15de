#include "auditbench/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace auditbench {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

uint64_t Rng::below(uint64_t n) {
  // Rejection sampling to avoid modulo bias.
  uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t draw;
  do {
    draw = next();
  } while (draw >= limit);
  return draw % n;
}

double Rng::normal() {
  double u1 = uniform01();
  double u2 = uniform01();
  // Guard against log(0).
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double Rng::laplace(double scale) {
  double u = uniform01() - 0.5;
  double sign = u < 0.0 ? -1.0 : 1.0;
  double mag = std::abs(u);
  if (mag >= 0.5) mag = 0.5 - 0x1.0p-53;
  return -scale * sign * std::log(1.0 - 2.0 * mag);
}

uint64_t derive_seed(uint64_t master, uint64_t index, std::string_view stage) {
  // FNV-1a over the stage tag, then splitmix rounds folding in master and
  // index. Stable across platforms and versions.
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : stage) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  h = splitmix64(h ^ splitmix64(master));
  h = splitmix64(h ^ splitmix64(index + 0x51ed270b0a1c2b3dULL));
  return h;
}

std::vector<size_t> sample_without_replacement(size_t n, size_t k, Rng& rng) {
  if (k > n) k = n;
  // Partial Fisher-Yates over an index array, then sort the selection.
  std::vector<size_t> indices(n);
  std::iota(indices.begin(), indices.end(), size_t{0});
  for (size_t i = 0; i < k; ++i) {
    size_t j = i + static_cast<size_t>(rng.below(n - i));
    std::swap(indices[i], indices[j]);
  }
  indices.resize(k);
  std::sort(indices.begin(), indices.end());
  return indices;
}

}  // namespace auditbench
