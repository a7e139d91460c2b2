#pragma once

#include <cstdint>
#include <vector>

#include "wfl/core.hpp"

namespace wfl {

/// P(N_avail = m) stored at index m - 1, for m in [1:N].
struct AvailabilityPmf {
  std::vector<double> probs;

  double operator()(int m) const { return probs.at(static_cast<std::size_t>(m - 1)); }
  int n_devices() const noexcept { return static_cast<int>(probs.size()); }
  double total() const noexcept;
  /// Entries in [0, 1] (with 1e-12 slack for rounding) summing to 1 within 1e-9.
  bool valid() const noexcept;
};

struct RaTiming {
  Slots compute_tail = 0;      // tau_comp_N
  double expected_comm = 0.0;  // E[T_comm]
  double expected_iter = 0.0;  // tau_comp_N + E[T_comm]
};

/// Probability that exactly one of `contenders` devices transmits:
/// M (1 - p)^(M-1) p.
double p_suc(int contenders, double p_tr);

/// E[T_comm | N_avail = n] = sum_{m=1}^{n} 1 / p_suc(m).
double expected_comm_given_avail(int n_avail, double p_tr);

/// Two devices: P(N_avail = 1) = 1 - (1 - p_tr)^(tau2 - tau1).
AvailabilityPmf pmf_avail_two(Slots tau1, Slots tau2, double p_tr);

/// Three devices, using the telescoped expression for P(N_avail = 2).
/// Throws SingularRate when |p_suc(2) - p_suc(1)| < 1e-12.
AvailabilityPmf pmf_avail_three_telescoped(Slots tau1, Slots tau2, Slots tau3, double p_tr);

/// Three devices. Falls back to the finite geometric sum over the
/// two-contender window when the telescoped form is singular (p_tr = 0.5).
AvailabilityPmf pmf_avail_three(Slots tau1, Slots tau2, Slots tau3, double p_tr);

/// tau_N + sum_m P(N_avail = m) E[T_comm | m], for N in {1, 2, 3}.
/// Throws UnsupportedN otherwise.
RaTiming expected_iter_ra_closed(const BatchAllocation& alloc, Samples rho, double p_tr);

struct PmfEstimate {
  AvailabilityPmf pmf;
  std::vector<McEstimate> entries;  // per-m frequency with its standard error
};

/// Monte-Carlo N_avail distribution for any N.
///
/// Each trial walks slots tau_1 + 1 .. tau_N. In a slot with m ready,
/// undelivered devices exactly one transmits with probability p_suc(m),
/// and the trial only tracks how many devices have delivered, since
/// contenders are exchangeable. Trial t draws from Rng::substream(seed, t).
PmfEstimate estimate_pmf_avail_mc(const BatchAllocation& alloc, Samples rho, double p_tr,
                                  std::int64_t trials, std::uint64_t seed);

struct RaIterEstimate {
  RaTiming timing;
  McEstimate estimate;  // of expected_iter; std_err 0 on closed-form paths
};

/// Expected RA iteration time. N <= 3 uses the closed form and ignores
/// `trials`; larger N averages E[T_comm | N_avail] over Monte-Carlo draws of
/// N_avail, so the standard error covers the PMF noise.
RaIterEstimate expected_iter_ra(const BatchAllocation& alloc, Samples rho, double p_tr,
                                std::int64_t trials, std::uint64_t seed);

}  // namespace wfl
