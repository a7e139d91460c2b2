#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "wfl/core.hpp"

namespace wfl {

/// Step-wise batch allocation.
///
/// Passes over the devices from the largest index down, adding `delta`
/// samples per device; pass k touches the top k devices (capped at N). The
/// device on which the running total reaches B is trimmed so the sizes sum
/// to B exactly, and allocation stops there. For B = delta (m N + N(N+1)/2)
/// this yields B_n = delta (m + n).
///
/// delta == 0 is the equal split, with the remainder of B / N spread one
/// sample each over the highest-index devices.
BatchAllocation stepwise_allocation(int n_devices, Samples total_batch, Samples delta);

enum class TwoDeviceCase { equal, degenerate, interior };
std::string_view to_string(TwoDeviceCase c) noexcept;

struct TwoDeviceOptimum {
  double b1 = 0.0;
  double b2 = 0.0;
  double delta = 0.0;  // unclamped stationary gap from the closed form
  TwoDeviceCase case_tag = TwoDeviceCase::equal;
};

/// Relaxed two-device objective Delta / (2 rho) + (1 - p_suc_1)^(Delta/rho) / p_suc_2.
double two_device_objective(double delta, Samples rho, double p_tr);

/// Real-valued minimizer of the relaxed two-device RA iteration time.
/// Delta* = rho / ln(1 - p_suc_1) * ln(-p_suc_2 / (2 ln(1 - p_suc_1))), clamped
/// to [0, B]. Requires p_tr in (0, 1).
TwoDeviceOptimum optimal_two(Samples total_batch, Samples rho, double p_tr);

/// Integer allocation from a real optimum: b1 floored, remainder to b2.
BatchAllocation round_two(const TwoDeviceOptimum& opt, Samples total_batch);

/// Relaxed three-device problem in the gaps Delta_1 = B_2 - B_1, Delta_2 = B_3 - B_2
/// with B_1 = (B - 2 Delta_1 - Delta_2) / 3. The objective is
/// B_3 / rho + E[sum_{m <= N_avail} 1 / p_suc_m] with real-valued compute times,
/// i.e. the closed-form N = 3 expected iteration time without ceilings.
class ThreeDeviceProblem {
 public:
  ThreeDeviceProblem(double total_batch, Samples rho, double p_tr);

  double objective(double d1, double d2) const;
  std::array<double, 2> gradient(double d1, double d2) const;

  double total_batch() const noexcept { return total_; }
  bool feasible(double d1, double d2, double slack = 0.0) const noexcept;
  /// Euclidean projection onto {d1 >= 0, d2 >= 0, 2 d1 + d2 <= B}.
  std::array<double, 2> project(double d1, double d2) const noexcept;

 private:
  double total_;
  double rho_;
  double s1_, s2_, s3_;
  double log_a_, log_c_;  // ln(1 - s1), ln(1 - s2)
  double log_ratio_;      // ln((1 - s2) / (1 - s1)); zero at p_tr = 0.5
};

struct ThreeDeviceOptimum {
  std::array<double, 2> deltas{};       // Delta_1, Delta_2
  std::array<double, 3> multipliers{};  // alpha_1, alpha_2 (gaps >= 0), alpha_3 (B_1 >= 0)
  std::array<double, 3> batches{};      // B_1, B_2, B_3
  double objective = 0.0;
  double kkt_residual = 0.0;  // norm of the Lagrangian gradient
  double complementary_slackness = 0.0;  // max_i |alpha_i * constraint_i|
};

/// Minimizes the three-device objective over the feasible triangle: grid warm
/// start (`grid` points per axis), projected gradient descent, then Newton
/// on the identified active face. Throws NoConvergence if the KKT residual
/// exceeds `tol` after the iteration cap.
ThreeDeviceOptimum optimal_three(double total_batch, Samples rho, double p_tr, double tol = 1e-6,
                                 int grid = 200);

struct DeltaRow {
  Samples delta = 0;
  double expected_iter = 0.0;
  double iter_std_err = 0.0;
  double expected_completion = 0.0;  // iterations * expected_iter
  double completion_std_err = 0.0;
};

struct DeltaSweep {
  Samples best_delta = 0;
  std::vector<DeltaRow> rows;  // sorted by delta
};

/// Evaluates step-wise allocations for each candidate gap. RA uses
/// expected_iter_ra with a per-candidate seed derive_seed(seed, delta), so the
/// table does not depend on candidate order. Completion is the iteration
/// time times `iterations` (1 when absent). Ties go to the smaller delta.
DeltaSweep optimize_delta(int n_devices, Samples total_batch, Samples rho, double p_tr,
                          std::vector<Samples> candidates, std::int64_t trials,
                          std::uint64_t seed, Protocol protocol = Protocol::ra,
                          std::optional<std::int64_t> iterations = std::nullopt);

}  // namespace wfl
