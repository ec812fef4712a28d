#pragma once

#include <cstdint>

#include "strigs/types.hpp"

namespace strigs {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Child seed for path `index` of an ensemble keyed by `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Counter-based standard normal stream: the value for (step, coordinate) is a
/// pure function of (seed, step, coordinate), so thinning checkpoints or
/// changing the evaluation order never changes a sample path.
class BrownianSource {
 public:
  explicit BrownianSource(std::uint64_t seed, bool negate = false)
      : seed_(seed), negate_(negate) {}

  std::uint64_t seed() const { return seed_; }
  bool negated() const { return negate_; }

  double normal(std::uint64_t step, std::uint64_t coordinate) const;

  /// out[i] = normal(step, i) for i < out.size() (sign flipped when negated).
  void standard_normals(std::uint64_t step, Vec& out) const;

 private:
  std::uint64_t seed_;
  bool negate_;
};

}  // namespace strigs
