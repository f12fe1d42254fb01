#pragma once

#include <cstdint>
#include <random>

namespace dgcrf {

// Noise generator, version 1: std::mt19937_64 (bit-exact across standard
// libraries) feeding a Box-Muller transform. std::normal_distribution is not
// used because its output is implementation-defined.
inline constexpr int kRngVersion = 1;

class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double normal();
  std::uint64_t next_u64() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// SplitMix64 finalizer, used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace dgcrf
