#pragma once

#include <span>
#include <vector>

#include "wfl/core.hpp"

namespace wfl {

struct TdmaTiming {
  std::vector<Slots> compute_slots;   // tau_comp per device
  std::vector<Slots> transmit_slots;  // scheduled uplink slot per device
  Slots iter_time = 0;
};

/// ceil(batch / rho).
Slots compute_time(Samples batch, Samples rho);

/// Lowest-index-first schedule: slot_n = max(tau_comp_n, slot_{n-1}) + 1 with
/// slot_0 = 0. Zero-batch devices still occupy a slot.
TdmaTiming tdma_schedule(const BatchAllocation& alloc, Samples rho);

/// max{tau_N, tau_{N-1} + 1, ..., tau_1 + N - 1} + 1.
Slots tdma_iter_time(const BatchAllocation& alloc, Samples rho);

/// Same closed form for an unordered size multiset (sorted first).
Slots tdma_iter_time(std::span<const Samples> sizes, Samples rho);

/// Minimum TDMA iteration time over all integer allocations of B.
///
/// With m the smallest integer >= 0 such that B <= rho (m N + N(N+1)/2) the
/// bound is m + N + 1. When B <= rho N(N-1)/2 every device but the last can
/// sit at zero samples and the bound drops to N, the number of uplink slots.
Slots tdma_lower_bound(int n_devices, Samples total_batch, Samples rho);

}  // namespace wfl
