#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "wfl/core.hpp"
#include "wfl/rng.hpp"

namespace wfl {

enum class SlotOutcome { idle, success, collision };

struct SlotEvent {
  Slots slot = 0;
  int contenders = 0;             // ready, undelivered devices at the start of the slot
  std::vector<int> transmitters;  // 0-based device indices
  SlotOutcome outcome = SlotOutcome::idle;
};

/// One federated-learning iteration, slot by slot. Device n becomes ready in
/// slot tau_comp_n + 1 and stops transmitting once delivered.
struct SlotTrace {
  std::vector<SlotEvent> events;       // slots 1..iter_time; empty when not recorded
  std::vector<Slots> delivery_slots;   // per device
  Slots iter_time = 0;                 // slot of the last delivery
};

constexpr Slots kDefaultSlotCap = 1'000'000;

/// Central scheduler: each slot serves the lowest-index ready device.
SlotTrace simulate_iter_tdma(const BatchAllocation& alloc, Samples rho, bool record = true);

/// Slotted random access: every ready, undelivered device transmits
/// independently with probability p_tr; a slot succeeds iff exactly one
/// device transmits. Throws SlotCapExceeded past `slot_cap`.
SlotTrace simulate_iter_ra(const BatchAllocation& alloc, Samples rho, double p_tr, Rng& rng,
                           Slots slot_cap = kDefaultSlotCap, bool record = true);

/// Sum of `iterations` independent iteration times under `protocol`.
Slots simulate_completion(Protocol protocol, const BatchAllocation& alloc, Samples rho,
                          double p_tr, std::int64_t iterations, Rng& rng,
                          Slots slot_cap = kDefaultSlotCap);

/// Mean RA iteration time over `trials` runs; trial t uses Rng::substream(seed, t).
McEstimate mc_iter_time_ra(const BatchAllocation& alloc, Samples rho, double p_tr,
                           std::int64_t trials, std::uint64_t seed,
                           Slots slot_cap = kDefaultSlotCap);

/// Writes "slot,transmitters,outcome" lines with a header. Transmitters are
/// 1-based device indices joined by ';' (empty when idle); outcome is idle,
/// success or collision.
void write_trace(std::ostream& out, const SlotTrace& trace);

}  // namespace wfl
