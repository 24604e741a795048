#pragma once

#include <cstdint>
#include <cstddef>
#include <string_view>
#include <vector>

namespace tsdiff {

// splitmix64: the mixing function used both as a PRNG seeder and for
// deriving per-component subseeds from one global seed.
std::uint64_t splitmix64(std::uint64_t& state);

// FNV-1a 64-bit hash. Used for component tags and file checksums.
std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed);

// Subseed derivation: subseed(seed, tag) = splitmix64(seed ^ fnv1a64(tag)).
// Changing one component's tag or seed never perturbs another component's
// random stream.
std::uint64_t subseed(std::uint64_t global_seed, std::string_view component_tag);

// Deterministic PRNG with explicit distribution transforms. All draws are
// defined in terms of the raw 64-bit stream, so results are reproducible
// across platforms and standard-library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 bits of mantissa.
  double uniform();
  // Uniform on [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  // Standard normal via Box-Muller (pairs cached).
  double normal();
  double normal(double mean, double stddev);

  // Fisher-Yates shuffle of indices [0, n).
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::uint64_t s_[4];  // xoshiro256++ state
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace tsdiff
