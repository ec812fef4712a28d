#include "strigs/rng.hpp"

#include <cmath>
#include <numbers>

namespace strigs {

namespace {

// Uniform in (0, 1] from the top 53 bits.
double unit_open_closed(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

double BrownianSource::normal(std::uint64_t step, std::uint64_t coordinate) const {
  std::uint64_t key = mix64(seed_);
  key = mix64(key ^ step);
  key = mix64(key ^ (coordinate * 0xd1b54a32d192ed03ULL));
  const double u1 = unit_open_closed(key);
  const double u2 = unit_open_closed(mix64(key ^ 0xa0761d6478bd642fULL));
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return negate_ ? -z : z;
}

void BrownianSource::standard_normals(std::uint64_t step, Vec& out) const {
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out[i] = normal(step, static_cast<std::uint64_t>(i));
  }
}

}  // namespace strigs
