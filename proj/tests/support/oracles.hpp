#pragma once

// Reference implementations used only by tests. Each one is written from the
// slot-level model directly, without calling the library routine it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace oracle {

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

// Probability that exactly one of m contenders transmits.
inline double one_of(int m, double p) {
  return m * std::pow(1.0 - p, m - 1) * p;
}

// Expected slots to drain m contenders, one geometric stage per delivery.
inline double drain(int m, double p) {
  double t = 0.0;
  for (int j = 1; j <= m; ++j) t += 1.0 / one_of(j, p);
  return t;
}

// Exact distribution of the number of undelivered devices once the slowest one
// is ready, by dynamic programming over "delivered so far" across the slots in
// which only some devices are ready. out[m - 1] = P(N_avail = m).
inline std::vector<double> avail_pmf(std::vector<std::int64_t> tau, double p) {
  std::sort(tau.begin(), tau.end());
  const int n = static_cast<int>(tau.size());
  std::vector<double> dist(n + 1, 0.0);  // index: delivered
  dist[0] = 1.0;
  for (std::int64_t slot = tau.front() + 1; slot <= tau.back(); ++slot) {
    int ready = 0;
    for (auto t : tau) ready += t < slot ? 1 : 0;
    std::vector<double> next(n + 1, 0.0);
    for (int d = 0; d <= n; ++d) {
      if (dist[d] == 0.0) continue;
      const int m = ready - d;
      if (m <= 0) {
        next[d] += dist[d];
        continue;
      }
      const double s = one_of(m, p);
      next[d + 1] += dist[d] * s;
      next[d] += dist[d] * (1.0 - s);
    }
    dist = next;
  }
  std::vector<double> out(n, 0.0);
  for (int d = 0; d < n; ++d) out[n - d - 1] = dist[d];
  return out;
}

inline double expected_ra_iter(const std::vector<std::int64_t>& sizes, std::int64_t rho, double p) {
  std::vector<std::int64_t> tau;
  for (auto b : sizes) tau.push_back(ceil_div(b, rho));
  const auto pmf = avail_pmf(tau, p);
  double e = static_cast<double>(*std::max_element(tau.begin(), tau.end()));
  for (std::size_t m = 1; m <= pmf.size(); ++m) e += pmf[m - 1] * drain(static_cast<int>(m), p);
  return e;
}

// Central scheduler run slot by slot: serve any ready device not yet served.
inline std::int64_t tdma_slots(std::vector<std::int64_t> sizes, std::int64_t rho) {
  std::vector<std::int64_t> ready;
  for (auto b : sizes) ready.push_back(ceil_div(b, rho));
  std::vector<bool> done(ready.size(), false);
  std::size_t left = ready.size();
  std::int64_t slot = 0;
  while (left > 0) {
    ++slot;
    for (std::size_t i = 0; i < ready.size(); ++i) {
      if (!done[i] && ready[i] < slot) {
        done[i] = true;
        --left;
        break;
      }
    }
  }
  return slot;
}

// Calls fn on every ascending vector of n non-negative integers summing to total.
inline void for_each_ascending(int n, std::int64_t total,
                               const std::function<void(const std::vector<std::int64_t>&)>& fn) {
  std::vector<std::int64_t> cur;
  std::function<void(std::int64_t, std::int64_t)> rec = [&](std::int64_t lo, std::int64_t left) {
    const int placed = static_cast<int>(cur.size());
    if (placed == n - 1) {
      if (left >= lo) {
        cur.push_back(left);
        fn(cur);
        cur.pop_back();
      }
      return;
    }
    const int rest = n - placed;
    for (std::int64_t v = lo; v * rest <= left; ++v) {
      cur.push_back(v);
      rec(v, left - v);
      cur.pop_back();
    }
  };
  rec(0, total);
}

// Two-device expected iteration time with real-valued compute times:
// slowest device ready at (B + d) / (2 rho); the faster one has d / rho slots alone.
inline double two_device_time(double d, double total, double rho, double p) {
  const double s1 = one_of(1, p);
  const double alone = std::pow(1.0 - s1, d / rho);
  return (total + d) / (2.0 * rho) + (1.0 - alone) * drain(1, p) + alone * drain(2, p);
}

}  // namespace oracle
