#pragma once

#include <cstdint>

namespace wfl {

/// Constants of the diminishing-step SGD bound.
struct ConvergenceConstants {
  double smoothness = 1.0;        // L
  double strong_convexity = 1.0;  // M
  double grad_bound = 0.1;        // lambda, bound on the per-sample gradient norm
  double step_scale = 1.5;        // c
  double step_shift = 1.0;        // gamma
  double initial_gap = 1.0;       // f(w^1) - f*
};

/// Checks M > 0, L > 0, M <= L, lambda > 0, gamma > 0, gap >= 0,
/// c > 1/M and c / (gamma + 1) <= 1/L. Throws InvalidConfig naming the field.
void validate_constants(const ConvergenceConstants& consts);

/// eta^k = c / (gamma + k), k >= 1.
double step_size(std::int64_t k, const ConvergenceConstants& consts);

/// nu = max{ L c^2 lambda^2 N / (2 B (2cM - 1)), (gamma + 1)(f(w^1) - f*) }.
/// Throws DegenerateConstants when 2cM - 1 <= 0.
double compute_nu(const ConvergenceConstants& consts, int n_devices, std::int64_t total_batch);

/// K(eps) = max(1, ceil(nu / eps - gamma)).
///
/// The quotient is snapped to the nearest integer when it lies within a
/// relative 1e-12 of it, so K(0.1) with nu = 2, gamma = 1 is 19 and not 20
/// because of the binary representation of 0.1.
std::int64_t required_iterations(double epsilon, double nu, double gamma);

/// nu / (gamma + k).
double gap_bound(std::int64_t k, double nu, double gamma);

}  // namespace wfl
