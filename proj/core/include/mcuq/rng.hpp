#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace mcuq {

// Seed derivation and the few distributions the library needs. The standard
// <random> distributions are implementation-defined, so everything that
// feeds persisted output is drawn through these helpers to keep files
// byte-identical across toolchains. std::mt19937_64 itself is fully
// specified by the standard.

std::uint64_t splitmix64(std::uint64_t x);

// Stable 64-bit FNV-1a.
std::uint64_t hash_string(std::string_view text);

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt);
std::uint64_t derive_seed(std::uint64_t base, std::string_view salt);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();

  // Uniform integer on [0, n); n > 0. Rejection sampling, no modulo bias.
  std::size_t index(std::size_t n);

  double normal(double mean = 0.0, double stddev = 1.0);

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mcuq
