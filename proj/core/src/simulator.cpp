#include "wfl/simulator.hpp"

#include <algorithm>
#include <ostream>
#include <string>

#include "wfl/error.hpp"
#include "wfl/timing_tdma.hpp"

namespace wfl {
namespace {

std::vector<Slots> compute_slots(const BatchAllocation& alloc, Samples rho) {
  std::vector<Slots> tau;
  tau.reserve(alloc.sizes().size());
  for (Samples b : alloc.sizes()) tau.push_back(compute_time(b, rho));
  return tau;
}

const char* outcome_name(SlotOutcome o) {
  switch (o) {
    case SlotOutcome::idle:
      return "idle";
    case SlotOutcome::success:
      return "success";
    case SlotOutcome::collision:
      return "collision";
  }
  return "?";
}

}  // namespace

SlotTrace simulate_iter_tdma(const BatchAllocation& alloc, Samples rho, bool record) {
  const std::vector<Slots> tau = compute_slots(alloc, rho);
  const std::size_t n = tau.size();
  SlotTrace trace;
  trace.delivery_slots.assign(n, 0);
  std::vector<bool> delivered(n, false);
  std::size_t remaining = n;
  for (Slots slot = 1; remaining > 0; ++slot) {
    SlotEvent ev;
    ev.slot = slot;
    std::size_t pick = n;
    for (std::size_t d = 0; d < n; ++d) {
      if (delivered[d] || tau[d] >= slot) continue;
      ++ev.contenders;
      if (pick == n) pick = d;
    }
    if (pick != n) {
      delivered[pick] = true;
      trace.delivery_slots[pick] = slot;
      --remaining;
      ev.transmitters.push_back(static_cast<int>(pick));
      ev.outcome = SlotOutcome::success;
      trace.iter_time = slot;
    }
    if (record) trace.events.push_back(std::move(ev));
  }
  return trace;
}

SlotTrace simulate_iter_ra(const BatchAllocation& alloc, Samples rho, double p_tr, Rng& rng,
                           Slots slot_cap, bool record) {
  if (!(p_tr > 0.0 && p_tr <= 1.0)) throw InvalidConfig("p_tr", "must lie in (0, 1]");
  if (alloc.n_devices() >= 2 && p_tr >= 1.0)
    throw InvalidConfig("p_tr", "must be < 1 for random access with two or more devices");
  const std::vector<Slots> tau = compute_slots(alloc, rho);
  const std::size_t n = tau.size();
  SlotTrace trace;
  trace.delivery_slots.assign(n, 0);
  std::vector<bool> delivered(n, false);
  std::size_t remaining = n;

  const Slots first_ready = *std::min_element(tau.begin(), tau.end()) + 1;
  if (record) {
    for (Slots slot = 1; slot < first_ready; ++slot) trace.events.push_back(SlotEvent{slot, 0, {}, SlotOutcome::idle});
  }
  std::vector<int> sent;
  sent.reserve(n);
  for (Slots slot = first_ready; remaining > 0; ++slot) {
    if (slot > slot_cap)
      throw SlotCapExceeded("random access did not finish within " + std::to_string(slot_cap) +
                            " slots");
    int contenders = 0;
    sent.clear();
    for (std::size_t d = 0; d < n; ++d) {
      if (delivered[d] || tau[d] >= slot) continue;
      ++contenders;
      if (rng.bernoulli(p_tr)) sent.push_back(static_cast<int>(d));
    }
    SlotOutcome outcome = SlotOutcome::idle;
    if (sent.size() == 1) {
      const auto d = static_cast<std::size_t>(sent.front());
      delivered[d] = true;
      trace.delivery_slots[d] = slot;
      trace.iter_time = slot;
      --remaining;
      outcome = SlotOutcome::success;
    } else if (sent.size() > 1) {
      outcome = SlotOutcome::collision;
    }
    if (record) trace.events.push_back(SlotEvent{slot, contenders, sent, outcome});
  }
  return trace;
}

Slots simulate_completion(Protocol protocol, const BatchAllocation& alloc, Samples rho,
                          double p_tr, std::int64_t iterations, Rng& rng, Slots slot_cap) {
  if (iterations < 1) throw InvalidConfig("iterations", "must be >= 1");
  if (protocol == Protocol::tdma)
    return iterations * simulate_iter_tdma(alloc, rho, false).iter_time;
  Slots total = 0;
  for (std::int64_t k = 0; k < iterations; ++k)
    total += simulate_iter_ra(alloc, rho, p_tr, rng, slot_cap, false).iter_time;
  return total;
}

McEstimate mc_iter_time_ra(const BatchAllocation& alloc, Samples rho, double p_tr,
                           std::int64_t trials, std::uint64_t seed, Slots slot_cap) {
  if (trials < 1) throw InvalidConfig("trials", "must be >= 1");
  RunningStats stats;
  for (std::int64_t t = 0; t < trials; ++t) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(t));
    stats.add(static_cast<double>(simulate_iter_ra(alloc, rho, p_tr, rng, slot_cap, false).iter_time));
  }
  return stats.estimate(seed);
}

void write_trace(std::ostream& out, const SlotTrace& trace) {
  out << "slot,transmitters,outcome\n";
  for (const SlotEvent& ev : trace.events) {
    out << ev.slot << ',';
    for (std::size_t i = 0; i < ev.transmitters.size(); ++i) {
      if (i) out << ';';
      out << ev.transmitters[i] + 1;
    }
    out << ',' << outcome_name(ev.outcome) << '\n';
  }
}

}  // namespace wfl
