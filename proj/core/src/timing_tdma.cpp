#include "wfl/timing_tdma.hpp"

#include <algorithm>
#include <stdexcept>

#include "wfl/error.hpp"

namespace wfl {

Slots compute_time(Samples batch, Samples rho) {
  if (rho < 1) throw InvalidConfig("compute_rate", "must be >= 1");
  if (batch < 0) throw InvalidConfig("batch", "must be >= 0");
  return (batch + rho - 1) / rho;
}

TdmaTiming tdma_schedule(const BatchAllocation& alloc, Samples rho) {
  TdmaTiming t;
  const auto sizes = alloc.sizes();
  t.compute_slots.reserve(sizes.size());
  t.transmit_slots.reserve(sizes.size());
  Slots previous = 0;
  for (Samples b : sizes) {
    const Slots comp = compute_time(b, rho);
    previous = std::max(comp, previous) + 1;
    t.compute_slots.push_back(comp);
    t.transmit_slots.push_back(previous);
  }
  t.iter_time = t.transmit_slots.back();
  return t;
}

Slots tdma_iter_time(std::span<const Samples> sizes, Samples rho) {
  std::vector<Samples> sorted(sizes.begin(), sizes.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<Slots>(sorted.size());
  Slots worst = 0;
  for (Slots i = 0; i < n; ++i) {
    // device i (0-based) still has n - 1 - i devices to serve after it
    worst = std::max(worst, compute_time(sorted[i], rho) + (n - 1 - i));
  }
  return worst + 1;
}

Slots tdma_iter_time(const BatchAllocation& alloc, Samples rho) {
  return tdma_iter_time(alloc.sizes(), rho);
}

Slots tdma_lower_bound(int n_devices, Samples total_batch, Samples rho) {
  if (n_devices < 1) throw InvalidConfig("n_devices", "must be >= 1");
  if (total_batch < 1) throw InvalidConfig("total_batch", "must be >= 1");
  if (rho < 1) throw InvalidConfig("compute_rate", "must be >= 1");
  const Samples n = n_devices;
  if (total_batch <= rho * n * (n - 1) / 2) return n;
  const Samples excess = total_batch - rho * n * (n + 1) / 2;
  const Samples m = excess <= 0 ? 0 : (excess + rho * n - 1) / (rho * n);
  return m + n + 1;
}

}  // namespace wfl
