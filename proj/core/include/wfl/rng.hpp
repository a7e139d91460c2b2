#pragma once

#include <cstdint>
#include <random>

namespace wfl {

/// Deterministic random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Seeds are whitened with SplitMix64 and sub-streams are derived
/// from (seed, index) pairs, so Monte-Carlo trial i can be replayed in
/// isolation. Conversions to doubles, Bernoulli draws, bounded integers and
/// normals are implemented here rather than with std:: distributions, whose
/// algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Stream `index` of the family rooted at `seed`.
  static Rng substream(std::uint64_t seed, std::uint64_t index);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, bound), bound >= 1. Lemire's multiply-and-reject.
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal via the polar Box-Muller method.
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finalizer; used for seed derivation.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed of sub-stream `index` under `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace wfl
