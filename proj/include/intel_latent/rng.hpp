#pragma once

#include <array>
#include <cstdint>

namespace intel_latent {

/// SplitMix64; used only to expand a 64-bit seed into xoshiro state.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();

 private:
  std::uint64_t state_;
};

/// xoshiro256** seeded through SplitMix64. All derived draws have a fixed
/// draw order so seeded streams are reproducible across platforms:
///   uniform()  one 64-bit draw, top 53 bits -> [0, 1)
///   normal()   two uniforms (Box-Muller, cosine branch only)
///   index(n)   one 64-bit draw, Lemire multiply-shift (bias < 2^-40 for
///              the n used here)
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  std::uint64_t operator()() { return next(); }
  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

  double uniform();
  double uniform(double low, double high) { return low + (high - low) * uniform(); }
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  /// Laplace(0, scale) by inverse CDF from one uniform.
  double laplace(double scale = 1.0);
  std::uint64_t index(std::uint64_t n);

  /// Independent child stream (seeded from this stream's next output).
  Rng split();

 private:
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace intel_latent
