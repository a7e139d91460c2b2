#include "wfl/timing_ra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "wfl/error.hpp"
#include "wfl/rng.hpp"
#include "wfl/timing_tdma.hpp"

namespace wfl {
namespace {

constexpr double kSingularThreshold = 1e-12;

void check_p(double p_tr) {
  if (!(p_tr > 0.0 && p_tr <= 1.0)) throw InvalidConfig("p_tr", "must lie in (0, 1]");
}

void check_order(Slots a, Slots b) {
  if (a > b) throw InvalidConfig("allocation", "compute times must be ascending");
}

}  // namespace

double AvailabilityPmf::total() const noexcept {
  return std::accumulate(probs.begin(), probs.end(), 0.0);
}

bool AvailabilityPmf::valid() const noexcept {
  if (probs.empty()) return false;
  for (double p : probs) {
    if (!(p >= -1e-12 && p <= 1.0 + 1e-12)) return false;
  }
  return std::abs(total() - 1.0) <= 1e-9;
}

double p_suc(int contenders, double p_tr) {
  if (contenders < 1) throw InvalidConfig("contenders", "must be >= 1");
  check_p(p_tr);
  return contenders * std::pow(1.0 - p_tr, contenders - 1) * p_tr;
}

double expected_comm_given_avail(int n_avail, double p_tr) {
  if (n_avail < 1) throw InvalidConfig("n_avail", "must be >= 1");
  double sum = 0.0;
  for (int m = 1; m <= n_avail; ++m) sum += 1.0 / p_suc(m, p_tr);
  return sum;
}

AvailabilityPmf pmf_avail_two(Slots tau1, Slots tau2, double p_tr) {
  check_order(tau1, tau2);
  const double stay = std::pow(1.0 - p_suc(1, p_tr), static_cast<double>(tau2 - tau1));
  return AvailabilityPmf{{1.0 - stay, stay}};
}

AvailabilityPmf pmf_avail_three_telescoped(Slots tau1, Slots tau2, Slots tau3, double p_tr) {
  check_order(tau1, tau2);
  check_order(tau2, tau3);
  const double s1 = p_suc(1, p_tr);
  const double s2 = p_suc(2, p_tr);
  if (std::abs(s2 - s1) < kSingularThreshold)
    throw SingularRate("p_suc(2) == p_suc(1); telescoped three-device PMF undefined");
  const auto d21 = static_cast<double>(tau2 - tau1);
  const auto d32 = static_cast<double>(tau3 - tau2);
  const auto d31 = static_cast<double>(tau3 - tau1);
  const double a = 1.0 - s1;
  const double b = 1.0 - s2;
  const double p3 = std::pow(a, d21) * std::pow(b, d32);
  const double p2 = std::pow(a, d32) + s1 / (s2 - s1) * std::pow(a, d31) -
                    s2 / (s2 - s1) * std::pow(a, d21) * std::pow(b, d32);
  return AvailabilityPmf{{1.0 - p2 - p3, p2, p3}};
}

AvailabilityPmf pmf_avail_three(Slots tau1, Slots tau2, Slots tau3, double p_tr) {
  try {
    return pmf_avail_three_telescoped(tau1, tau2, tau3, p_tr);
  } catch (const SingularRate&) {
    // fall through to the untelescoped sum
  }
  const double s1 = p_suc(1, p_tr);
  const double s2 = p_suc(2, p_tr);
  const double a = 1.0 - s1;
  const double b = 1.0 - s2;
  const Slots d21 = tau2 - tau1;
  const Slots d32 = tau3 - tau2;
  const double head = std::pow(a, static_cast<double>(d21));
  // device 1 already delivered before tau2; device 2 alone fails through the window
  double p2 = (1.0 - head) * std::pow(a, static_cast<double>(d32));
  // first delivery at window slot t while two contend, survivor fails the rest
  double window = 0.0;
  for (Slots t = 1; t <= d32; ++t) {
    window += s2 * std::pow(b, static_cast<double>(t - 1)) *
              std::pow(a, static_cast<double>(d32 - t));
  }
  p2 += head * window;
  const double p3 = head * std::pow(b, static_cast<double>(d32));
  return AvailabilityPmf{{1.0 - p2 - p3, p2, p3}};
}

RaTiming expected_iter_ra_closed(const BatchAllocation& alloc, Samples rho, double p_tr) {
  const int n = alloc.n_devices();
  std::vector<Slots> tau;
  for (Samples b : alloc.sizes()) tau.push_back(compute_time(b, rho));

  AvailabilityPmf pmf;
  switch (n) {
    case 1:
      check_p(p_tr);
      pmf.probs = {1.0};
      break;
    case 2:
      pmf = pmf_avail_two(tau[0], tau[1], p_tr);
      break;
    case 3:
      pmf = pmf_avail_three(tau[0], tau[1], tau[2], p_tr);
      break;
    default:
      throw UnsupportedN("closed-form RA iteration time covers N <= 3, got N = " +
                         std::to_string(n));
  }

  RaTiming t;
  t.compute_tail = tau.back();
  for (int m = 1; m <= n; ++m) t.expected_comm += pmf(m) * expected_comm_given_avail(m, p_tr);
  t.expected_iter = static_cast<double>(t.compute_tail) + t.expected_comm;
  return t;
}

namespace {

// Number of devices still undelivered at slot tau_N + 1 for one trial.
int sample_n_avail(const std::vector<Slots>& tau, const std::vector<double>& success, Rng& rng) {
  const int n = static_cast<int>(tau.size());
  int ready = 0;
  int delivered = 0;
  for (Slots slot = tau.front() + 1; slot <= tau.back(); ++slot) {
    while (ready < n && tau[static_cast<std::size_t>(ready)] < slot) ++ready;
    const int contenders = ready - delivered;
    if (contenders > 0 && rng.uniform() < success[static_cast<std::size_t>(contenders)])
      ++delivered;
  }
  return n - delivered;
}

}  // namespace

PmfEstimate estimate_pmf_avail_mc(const BatchAllocation& alloc, Samples rho, double p_tr,
                                  std::int64_t trials, std::uint64_t seed) {
  if (trials < 1) throw InvalidConfig("trials", "must be >= 1");
  check_p(p_tr);
  const int n = alloc.n_devices();
  std::vector<Slots> tau;
  for (Samples b : alloc.sizes()) tau.push_back(compute_time(b, rho));
  std::vector<double> success(static_cast<std::size_t>(n) + 1, 0.0);
  for (int m = 1; m <= n; ++m) success[static_cast<std::size_t>(m)] = p_suc(m, p_tr);

  std::vector<std::int64_t> counts(static_cast<std::size_t>(n), 0);
  for (std::int64_t t = 0; t < trials; ++t) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(t));
    ++counts[static_cast<std::size_t>(sample_n_avail(tau, success, rng) - 1)];
  }

  PmfEstimate out;
  const auto total = static_cast<double>(trials);
  for (int m = 0; m < n; ++m) {
    const double freq = static_cast<double>(counts[static_cast<std::size_t>(m)]) / total;
    out.pmf.probs.push_back(freq);
    McEstimate e;
    e.mean = freq;
    e.trials = trials;
    e.seed = seed;
    // sample stddev of an indicator with the n - 1 denominator
    e.std_err = trials > 1 ? std::sqrt(freq * (1.0 - freq) * total / (total - 1.0) / total) : 0.0;
    out.entries.push_back(e);
  }
  return out;
}

RaIterEstimate expected_iter_ra(const BatchAllocation& alloc, Samples rho, double p_tr,
                                std::int64_t trials, std::uint64_t seed) {
  RaIterEstimate out;
  const int n = alloc.n_devices();
  if (n <= 3) {
    out.timing = expected_iter_ra_closed(alloc, rho, p_tr);
    out.estimate = McEstimate{out.timing.expected_iter, 0.0, 0, seed};
    return out;
  }
  if (trials < 1) throw InvalidConfig("trials", "must be >= 1");
  check_p(p_tr);
  if (p_tr >= 1.0) throw InvalidConfig("p_tr", "must be < 1 for random access with N >= 2");

  std::vector<Slots> tau;
  for (Samples b : alloc.sizes()) tau.push_back(compute_time(b, rho));
  std::vector<double> success(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> comm(static_cast<std::size_t>(n) + 1, 0.0);
  for (int m = 1; m <= n; ++m) {
    success[static_cast<std::size_t>(m)] = p_suc(m, p_tr);
    comm[static_cast<std::size_t>(m)] =
        comm[static_cast<std::size_t>(m - 1)] + 1.0 / success[static_cast<std::size_t>(m)];
  }

  RunningStats stats;
  for (std::int64_t t = 0; t < trials; ++t) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(t));
    stats.add(comm[static_cast<std::size_t>(sample_n_avail(tau, success, rng))]);
  }
  out.timing.compute_tail = tau.back();
  out.timing.expected_comm = stats.mean();
  out.timing.expected_iter = static_cast<double>(tau.back()) + stats.mean();
  out.estimate = stats.estimate(seed);
  out.estimate.mean = out.timing.expected_iter;
  return out;
}

}  // namespace wfl
