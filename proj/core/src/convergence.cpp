#include "wfl/convergence.hpp"

#include <algorithm>
#include <cmath>

#include "wfl/error.hpp"

namespace wfl {

void validate_constants(const ConvergenceConstants& c) {
  if (!(c.smoothness > 0.0)) throw InvalidConfig("smoothness", "L must be > 0");
  if (!(c.strong_convexity > 0.0)) throw InvalidConfig("strong_convexity", "M must be > 0");
  if (c.strong_convexity > c.smoothness)
    throw InvalidConfig("strong_convexity", "M must not exceed L");
  if (!(c.grad_bound > 0.0)) throw InvalidConfig("grad_bound", "lambda must be > 0");
  if (!(c.step_shift > 0.0)) throw InvalidConfig("step_shift", "gamma must be > 0");
  if (!(c.initial_gap >= 0.0)) throw InvalidConfig("initial_gap", "must be >= 0");
  if (!(c.step_scale > 1.0 / c.strong_convexity))
    throw InvalidConfig("step_scale", "c must exceed 1/M");
  if (c.step_scale / (c.step_shift + 1.0) > 1.0 / c.smoothness)
    throw InvalidConfig("step_scale", "first step c/(gamma+1) must not exceed 1/L");
}

double step_size(std::int64_t k, const ConvergenceConstants& consts) {
  return consts.step_scale / (consts.step_shift + static_cast<double>(k));
}

double compute_nu(const ConvergenceConstants& c, int n_devices, std::int64_t total_batch) {
  const double denom_factor = 2.0 * c.step_scale * c.strong_convexity - 1.0;
  if (!(denom_factor > 0.0)) throw DegenerateConstants("2cM - 1 must be positive");
  if (total_batch < 1) throw InvalidConfig("total_batch", "must be >= 1");
  const double variance_term = c.smoothness * c.step_scale * c.step_scale * c.grad_bound *
                               c.grad_bound * n_devices /
                               (2.0 * static_cast<double>(total_batch) * denom_factor);
  const double start_term = (c.step_shift + 1.0) * c.initial_gap;
  return std::max(variance_term, start_term);
}

std::int64_t required_iterations(double epsilon, double nu, double gamma) {
  double k = nu / epsilon - gamma;
  const double nearest = std::round(k);
  if (std::abs(k - nearest) <= 1e-12 * std::max(1.0, std::abs(k))) k = nearest;
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(k)));
}

double gap_bound(std::int64_t k, double nu, double gamma) {
  return nu / (gamma + static_cast<double>(k));
}

}  // namespace wfl
