#pragma once

#include <cstdint>
#include <string_view>

namespace udepth {

/// xoshiro256** seeded through splitmix64. The bit stream, uniform and
/// normal variates are fully specified here so seeded runs reproduce across
/// compilers and platforms (std distributions do not guarantee that).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via the Box-Muller transform (one value per call).
  double normal();

 private:
  std::uint64_t s_[4];
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Independent seed for a named sub-stream ("init", "sfm-noise", ...).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);

}  // namespace udepth
