#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace wfl {

/// Sample counts and slot counts are both plain signed 64-bit integers.
using Samples = std::int64_t;
using Slots = std::int64_t;

enum class Protocol { tdma, ra };

std::string_view to_string(Protocol p) noexcept;
/// Accepts "tdma" and "ra"; throws InvalidConfig("protocol") otherwise.
Protocol parse_protocol(std::string_view text);

struct SystemConfig {
  int n_devices = 1;       // N
  Samples total_batch = 1; // B
  Samples compute_rate = 1;  // rho, samples per slot
  double p_tr = 1.0;
};

/// Throws InvalidConfig naming the first violated invariant. Under random
/// access with two or more devices p_tr must be < 1, otherwise every slot
/// collides forever.
void validate_config(const SystemConfig& cfg, Protocol protocol = Protocol::ra);

/// Per-device batch sizes in ascending device order, summing to a fixed total.
class BatchAllocation {
 public:
  /// Validates order and sum; throws InvalidConfig("allocation") on failure.
  BatchAllocation(std::vector<Samples> sizes, Samples total_batch);

  /// Sorts an arbitrary multiset of sizes into the ascending canonical form.
  static BatchAllocation canonical(std::vector<Samples> sizes);

  std::span<const Samples> sizes() const noexcept { return sizes_; }
  Samples operator[](std::size_t n) const { return sizes_[n]; }
  int n_devices() const noexcept { return static_cast<int>(sizes_.size()); }
  Samples total() const noexcept { return total_; }

  friend bool operator==(const BatchAllocation&, const BatchAllocation&) = default;

 private:
  std::vector<Samples> sizes_;
  Samples total_ = 0;
};

/// Result of a Monte-Carlo estimate. std_err is sample stddev / sqrt(trials).
struct McEstimate {
  double mean = 0.0;
  double std_err = 0.0;
  std::int64_t trials = 0;
  std::uint64_t seed = 0;
};

/// Welford accumulator producing McEstimate.
class RunningStats {
 public:
  void add(double x) noexcept;
  std::int64_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  /// Unbiased sample variance; 0 for fewer than two samples.
  double variance() const noexcept;
  McEstimate estimate(std::uint64_t seed) const noexcept;

 private:
  std::int64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace wfl
