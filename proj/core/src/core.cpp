#include "wfl/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "wfl/error.hpp"

namespace wfl {

std::string_view to_string(Protocol p) noexcept {
  return p == Protocol::tdma ? "tdma" : "ra";
}

Protocol parse_protocol(std::string_view text) {
  if (text == "tdma") return Protocol::tdma;
  if (text == "ra") return Protocol::ra;
  throw InvalidConfig("protocol", "expected tdma or ra, got '" + std::string(text) + "'");
}

void validate_config(const SystemConfig& cfg, Protocol protocol) {
  if (cfg.n_devices < 1) throw InvalidConfig("n_devices", "must be >= 1");
  if (cfg.total_batch < 1) throw InvalidConfig("total_batch", "must be >= 1");
  if (cfg.compute_rate < 1) throw InvalidConfig("compute_rate", "must be >= 1");
  if (!(cfg.p_tr > 0.0 && cfg.p_tr <= 1.0)) throw InvalidConfig("p_tr", "must lie in (0, 1]");
  if (protocol == Protocol::ra && cfg.n_devices >= 2 && cfg.p_tr >= 1.0)
    throw InvalidConfig("p_tr", "must be < 1 for random access with two or more devices");
}

BatchAllocation::BatchAllocation(std::vector<Samples> sizes, Samples total_batch)
    : sizes_(std::move(sizes)), total_(total_batch) {
  if (sizes_.empty()) throw InvalidConfig("allocation", "no devices");
  if (std::any_of(sizes_.begin(), sizes_.end(), [](Samples s) { return s < 0; }))
    throw InvalidConfig("allocation", "negative batch size");
  if (!std::is_sorted(sizes_.begin(), sizes_.end()))
    throw InvalidConfig("allocation", "batch sizes must be ascending");
  if (std::accumulate(sizes_.begin(), sizes_.end(), Samples{0}) != total_)
    throw InvalidConfig("allocation", "batch sizes must sum to " + std::to_string(total_));
}

BatchAllocation BatchAllocation::canonical(std::vector<Samples> sizes) {
  std::sort(sizes.begin(), sizes.end());
  const Samples total = std::accumulate(sizes.begin(), sizes.end(), Samples{0});
  return BatchAllocation(std::move(sizes), total);
}

void RunningStats::add(double x) noexcept {
  ++n_;
  const double d = x - mean_;
  mean_ += d / static_cast<double>(n_);
  m2_ += d * (x - mean_);
}

double RunningStats::variance() const noexcept {
  return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1);
}

McEstimate RunningStats::estimate(std::uint64_t seed) const noexcept {
  McEstimate e;
  e.mean = mean_;
  e.trials = n_;
  e.seed = seed;
  e.std_err = n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  return e;
}

}  // namespace wfl
