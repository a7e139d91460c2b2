#include "wfl/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "wfl/error.hpp"
#include "wfl/rng.hpp"
#include "wfl/timing_ra.hpp"
#include "wfl/timing_tdma.hpp"

namespace wfl {

BatchAllocation stepwise_allocation(int n_devices, Samples total_batch, Samples delta) {
  if (n_devices < 1) throw InvalidConfig("n_devices", "must be >= 1");
  if (total_batch < 0) throw InvalidConfig("total_batch", "must be >= 0");
  if (delta < 0) throw InvalidConfig("delta", "must be >= 0");
  const auto n = static_cast<std::size_t>(n_devices);
  std::vector<Samples> sizes(n, 0);

  if (delta == 0) {
    const Samples base = total_batch / n_devices;
    const auto extra = static_cast<std::size_t>(total_batch % n_devices);
    for (std::size_t i = 0; i < n; ++i) sizes[i] = base + (i >= n - extra ? 1 : 0);
    return BatchAllocation(std::move(sizes), total_batch);
  }
  if (total_batch == 0) return BatchAllocation(std::move(sizes), 0);

  Samples assigned = 0;
  std::size_t width = 1;  // devices touched by the current pass
  bool done = false;
  while (!done) {
    for (std::size_t k = 0; k < width; ++k) {
      const std::size_t idx = n - 1 - k;
      sizes[idx] += delta;
      assigned += delta;
      if (assigned >= total_batch) {
        sizes[idx] -= assigned - total_batch;
        done = true;
        break;
      }
    }
    width = std::min(width + 1, n);
  }
  return BatchAllocation(std::move(sizes), total_batch);
}

std::string_view to_string(TwoDeviceCase c) noexcept {
  switch (c) {
    case TwoDeviceCase::equal:
      return "equal";
    case TwoDeviceCase::degenerate:
      return "degenerate";
    case TwoDeviceCase::interior:
      return "interior";
  }
  return "unknown";
}

namespace {

void check_open_p(double p_tr) {
  if (!(p_tr > 0.0 && p_tr < 1.0)) throw InvalidConfig("p_tr", "must lie in (0, 1)");
}

}  // namespace

double two_device_objective(double delta, Samples rho, double p_tr) {
  check_open_p(p_tr);
  const double s1 = p_suc(1, p_tr);
  const double s2 = p_suc(2, p_tr);
  const auto r = static_cast<double>(rho);
  return delta / (2.0 * r) + std::pow(1.0 - s1, delta / r) / s2;
}

TwoDeviceOptimum optimal_two(Samples total_batch, Samples rho, double p_tr) {
  check_open_p(p_tr);
  if (rho < 1) throw InvalidConfig("compute_rate", "must be >= 1");
  if (total_batch < 0) throw InvalidConfig("total_batch", "must be >= 0");
  const double s1 = p_suc(1, p_tr);
  const double s2 = p_suc(2, p_tr);
  const double log_fail = std::log1p(-s1);
  const auto b = static_cast<double>(total_batch);

  TwoDeviceOptimum opt;
  opt.delta = static_cast<double>(rho) / log_fail * std::log(-s2 / (2.0 * log_fail));
  if (opt.delta < 0.0) {
    opt.case_tag = TwoDeviceCase::equal;
    opt.b1 = opt.b2 = b / 2.0;
  } else if (opt.delta > b) {
    opt.case_tag = TwoDeviceCase::degenerate;
    opt.b1 = 0.0;
    opt.b2 = b;
  } else {
    opt.case_tag = TwoDeviceCase::interior;
    opt.b1 = (b - opt.delta) / 2.0;
    opt.b2 = (b + opt.delta) / 2.0;
  }
  return opt;
}

BatchAllocation round_two(const TwoDeviceOptimum& opt, Samples total_batch) {
  const auto b1 = static_cast<Samples>(std::floor(opt.b1));
  return BatchAllocation({b1, total_batch - b1}, total_batch);
}

// ---------------------------------------------------------------------------
// Three devices

ThreeDeviceProblem::ThreeDeviceProblem(double total_batch, Samples rho, double p_tr)
    : total_(total_batch), rho_(static_cast<double>(rho)) {
  check_open_p(p_tr);
  if (rho < 1) throw InvalidConfig("compute_rate", "must be >= 1");
  if (!(total_batch >= 0.0)) throw InvalidConfig("total_batch", "must be >= 0");
  s1_ = p_suc(1, p_tr);
  s2_ = p_suc(2, p_tr);
  s3_ = p_suc(3, p_tr);
  log_a_ = std::log1p(-s1_);
  log_c_ = std::log1p(-s2_);
  log_ratio_ = std::log1p((s1_ - s2_) / (1.0 - s1_));
}

namespace {

// (a^y - c^y) / (s2 - s1) written as a^(y-1) expm1(yL) / expm1(L), finite at L = 0.
struct GapTerm {
  double value;
  double slope;
};

GapTerm gap_term(double y, double log_a, double log_ratio) {
  const double scale = std::exp((y - 1.0) * log_a);
  double r = y;
  double dr = 1.0;
  if (log_ratio != 0.0) {
    const double denom = std::expm1(log_ratio);
    r = std::expm1(y * log_ratio) / denom;
    dr = log_ratio * std::exp(y * log_ratio) / denom;
  }
  const double value = scale * r;
  return {value, log_a * value + scale * dr};
}

}  // namespace

double ThreeDeviceProblem::objective(double d1, double d2) const {
  const double x = d1 / rho_;
  const double y = d2 / rho_;
  const double ax = std::exp(x * log_a_);
  const double ay = std::exp(y * log_a_);
  const double cy = std::exp(y * log_c_);
  const GapTerm g = gap_term(y, log_a_, log_ratio_);
  const double tail = (total_ + d1 + 2.0 * d2) / (3.0 * rho_);
  return tail + 1.0 / s1_ + (ay + s1_ * ax * g.value) / s2_ + ax * cy / s3_;
}

std::array<double, 2> ThreeDeviceProblem::gradient(double d1, double d2) const {
  const double x = d1 / rho_;
  const double y = d2 / rho_;
  const double ax = std::exp(x * log_a_);
  const double ay = std::exp(y * log_a_);
  const double cy = std::exp(y * log_c_);
  const GapTerm g = gap_term(y, log_a_, log_ratio_);
  const double dx = 1.0 / 3.0 + s1_ / s2_ * log_a_ * ax * g.value + log_a_ * ax * cy / s3_;
  const double dy =
      2.0 / 3.0 + (log_a_ * ay + s1_ * ax * g.slope) / s2_ + log_c_ * ax * cy / s3_;
  return {dx / rho_, dy / rho_};
}

bool ThreeDeviceProblem::feasible(double d1, double d2, double slack) const noexcept {
  return d1 >= -slack && d2 >= -slack && 2.0 * d1 + d2 <= total_ + slack;
}

std::array<double, 2> ThreeDeviceProblem::project(double d1, double d2) const noexcept {
  if (feasible(d1, d2)) return {d1, d2};
  const std::array<std::array<double, 2>, 3> v{{{0.0, 0.0}, {total_ / 2.0, 0.0}, {0.0, total_}}};
  const std::array<std::array<int, 2>, 3> edges{{{0, 1}, {0, 2}, {1, 2}}};
  std::array<double, 2> best{0.0, 0.0};
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto& e : edges) {
    const auto& p = v[static_cast<std::size_t>(e[0])];
    const auto& q = v[static_cast<std::size_t>(e[1])];
    const double ex = q[0] - p[0];
    const double ey = q[1] - p[1];
    const double len2 = ex * ex + ey * ey;
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp(((d1 - p[0]) * ex + (d2 - p[1]) * ey) / len2, 0.0, 1.0);
    const double cx = p[0] + t * ex;
    const double cy = p[1] + t * ey;
    const double dist = (cx - d1) * (cx - d1) + (cy - d2) * (cy - d2);
    if (dist < best_dist) {
      best_dist = dist;
      best = {cx, cy};
    }
  }
  // snap so the projected point lies exactly on the boundary it was projected to
  best[0] = std::max(best[0], 0.0);
  best[1] = std::max(best[1], 0.0);
  if (2.0 * best[0] + best[1] > total_) best[1] = std::max(0.0, total_ - 2.0 * best[0]);
  return best;
}

namespace {

using Point = std::array<double, 2>;

constexpr int kDescentCap = 20000;
constexpr int kNewtonCap = 100;
constexpr int kActiveSetRounds = 8;

struct ActiveSet {
  bool lower1 = false;  // Delta_1 = 0
  bool lower2 = false;  // Delta_2 = 0
  bool upper = false;   // 2 Delta_1 + Delta_2 = B
  int count() const { return int(lower1) + int(lower2) + int(upper); }
};

double norm(const Point& p) { return std::hypot(p[0], p[1]); }

ActiveSet active_at(const ThreeDeviceProblem& prob, Point& x) {
  const double tol = 1e-9 * std::max(1.0, prob.total_batch());
  ActiveSet a;
  if (x[0] <= tol) {
    x[0] = 0.0;
    a.lower1 = true;
  }
  if (x[1] <= tol) {
    x[1] = 0.0;
    a.lower2 = true;
  }
  if (2.0 * x[0] + x[1] >= prob.total_batch() - tol) {
    a.upper = true;
    if (a.lower1) {
      x[1] = prob.total_batch();
    } else if (a.lower2) {
      x[0] = prob.total_batch() / 2.0;
    } else {
      x[1] = prob.total_batch() - 2.0 * x[0];
    }
  }
  return a;
}

Point projected_descent(const ThreeDeviceProblem& prob, Point x) {
  x = prob.project(x[0], x[1]);
  double step = 1.0;
  const double stop = 1e-12 * std::max(1.0, prob.total_batch());
  for (int it = 0; it < kDescentCap; ++it) {
    const Point g = prob.gradient(x[0], x[1]);
    const double f = prob.objective(x[0], x[1]);
    Point next = x;
    double moved = 0.0;
    while (step > 1e-30) {
      next = prob.project(x[0] - step * g[0], x[1] - step * g[1]);
      moved = std::hypot(next[0] - x[0], next[1] - x[1]);
      if (moved == 0.0) break;
      if (prob.objective(next[0], next[1]) <= f - 1e-4 / step * moved * moved) break;
      step *= 0.5;
    }
    if (moved == 0.0 || step <= 1e-30) break;
    x = next;
    if (moved <= stop) break;
    step *= 2.0;
  }
  return x;
}

// Newton on phi(t) = h(origin + t dir), t in [lo, hi].
double newton_line(const ThreeDeviceProblem& prob, Point origin, Point dir, double t, double lo,
                   double hi) {
  auto at = [&](double s) { return Point{origin[0] + s * dir[0], origin[1] + s * dir[1]}; };
  auto slope = [&](double s) {
    const Point p = at(s);
    const Point g = prob.gradient(p[0], p[1]);
    return g[0] * dir[0] + g[1] * dir[1];
  };
  const double fd = 1e-7 * std::max(1.0, hi - lo);
  for (int it = 0; it < kNewtonCap; ++it) {
    const double d = slope(t);
    if (std::abs(d) < 1e-15) break;
    const double curv = (slope(t + fd) - slope(t - fd)) / (2.0 * fd);
    double next = curv > 0.0 ? t - d / curv : (d > 0.0 ? lo : hi);
    next = std::clamp(next, lo, hi);
    const Point pt = at(t);
    const double ft = prob.objective(pt[0], pt[1]);
    // halve back toward t until the objective does not rise
    for (int k = 0; k < 60; ++k) {
      const Point pn = at(next);
      if (prob.objective(pn[0], pn[1]) <= ft + 1e-14 * std::abs(ft)) break;
      next = 0.5 * (next + t);
    }
    if (std::abs(next - t) <= 1e-15 * std::max(1.0, std::abs(t))) {
      t = next;
      break;
    }
    t = next;
  }
  return t;
}

Point newton_interior(const ThreeDeviceProblem& prob, Point x) {
  const double fd = 1e-7 * std::max(1.0, prob.total_batch());
  for (int it = 0; it < kNewtonCap; ++it) {
    const Point g = prob.gradient(x[0], x[1]);
    if (norm(g) < 1e-15) break;
    const Point g1p = prob.gradient(x[0] + fd, x[1]);
    const Point g1m = prob.gradient(x[0] - fd, x[1]);
    const Point g2p = prob.gradient(x[0], x[1] + fd);
    const Point g2m = prob.gradient(x[0], x[1] - fd);
    const double h11 = (g1p[0] - g1m[0]) / (2.0 * fd);
    const double h22 = (g2p[1] - g2m[1]) / (2.0 * fd);
    const double h12 = 0.5 * ((g1p[1] - g1m[1]) + (g2p[0] - g2m[0])) / (2.0 * fd);
    const double det = h11 * h22 - h12 * h12;
    if (!(h11 > 0.0 && det > 0.0)) break;  // not locally convex; leave it to descent
    Point step{-(h22 * g[0] - h12 * g[1]) / det, -(h11 * g[1] - h12 * g[0]) / det};
    const double f = prob.objective(x[0], x[1]);
    Point next{x[0] + step[0], x[1] + step[1]};
    int k = 0;
    while (k < 60 && (!prob.feasible(next[0], next[1]) ||
                      prob.objective(next[0], next[1]) > f + 1e-14 * std::abs(f))) {
      step = {0.5 * step[0], 0.5 * step[1]};
      next = {x[0] + step[0], x[1] + step[1]};
      ++k;
    }
    if (k == 60) break;
    const double moved = norm(step);
    x = next;
    if (moved <= 1e-15 * std::max(1.0, norm(x))) break;
  }
  return x;
}

Point polish(const ThreeDeviceProblem& prob, Point x) {
  const ActiveSet a = active_at(prob, x);
  const double b = prob.total_batch();
  switch (a.count()) {
    case 0:
      return newton_interior(prob, x);
    case 1:
      if (a.lower1) {
        const double t = newton_line(prob, {0.0, 0.0}, {0.0, 1.0}, x[1], 0.0, b);
        return {0.0, t};
      }
      if (a.lower2) {
        const double t = newton_line(prob, {0.0, 0.0}, {1.0, 0.0}, x[0], 0.0, b / 2.0);
        return {t, 0.0};
      }
      {
        const double t = newton_line(prob, {0.0, b}, {1.0, -2.0}, x[0], 0.0, b / 2.0);
        return {t, b - 2.0 * t};
      }
    default:
      return x;  // vertex
  }
}

struct KktReport {
  std::array<double, 3> alpha{};
  double residual = 0.0;
  double slackness = 0.0;
};

// Nonnegative multipliers minimizing |grad h + sum alpha_i n_i| over the active
// constraints, with n_1 = (-1, 0), n_2 = (0, -1), n_3 = (2, 1).
KktReport kkt_at(const ThreeDeviceProblem& prob, Point x) {
  const ActiveSet a = active_at(prob, x);
  const Point g = prob.gradient(x[0], x[1]);
  const std::array<Point, 3> normals{{{-1.0, 0.0}, {0.0, -1.0}, {2.0, 1.0}}};
  const std::array<bool, 3> active{a.lower1, a.lower2, a.upper};

  KktReport best;
  best.residual = norm(g);
  for (int i = 0; i < 3; ++i) {
    if (!active[static_cast<std::size_t>(i)]) continue;
    const Point& n = normals[static_cast<std::size_t>(i)];
    const double alpha = -(g[0] * n[0] + g[1] * n[1]) / (n[0] * n[0] + n[1] * n[1]);
    if (alpha < 0.0) continue;
    const double r = std::hypot(g[0] + alpha * n[0], g[1] + alpha * n[1]);
    if (r < best.residual) {
      best = KktReport{};
      best.alpha[static_cast<std::size_t>(i)] = alpha;
      best.residual = r;
    }
    for (int j = i + 1; j < 3; ++j) {
      if (!active[static_cast<std::size_t>(j)]) continue;
      const Point& m = normals[static_cast<std::size_t>(j)];
      const double det = n[0] * m[1] - n[1] * m[0];
      if (det == 0.0) continue;
      // solve [n m] (ai, aj)^T = -g
      const double ai = (-g[0] * m[1] + g[1] * m[0]) / det;
      const double aj = (-n[0] * g[1] + n[1] * g[0]) / det;
      if (ai < 0.0 || aj < 0.0) continue;
      const double r = std::hypot(g[0] + ai * n[0] + aj * m[0], g[1] + ai * n[1] + aj * m[1]);
      if (r < best.residual) {
        best = KktReport{};
        best.alpha[static_cast<std::size_t>(i)] = ai;
        best.alpha[static_cast<std::size_t>(j)] = aj;
        best.residual = r;
      }
    }
  }
  const double c1 = std::abs(best.alpha[0] * x[0]);
  const double c2 = std::abs(best.alpha[1] * x[1]);
  const double c3 = std::abs(best.alpha[2] * (2.0 * x[0] + x[1] - prob.total_batch()));
  best.slackness = std::max({c1, c2, c3});
  return best;
}

struct Candidate {
  Point x;
  double objective;
  KktReport kkt;
};

Candidate solve_from(const ThreeDeviceProblem& prob, Point start, double tol) {
  Point x = start;
  Candidate c{};
  for (int round = 0; round < kActiveSetRounds; ++round) {
    x = projected_descent(prob, x);
    x = polish(prob, x);
    active_at(prob, x);
    c.x = x;
    c.objective = prob.objective(x[0], x[1]);
    c.kkt = kkt_at(prob, x);
    if (c.kkt.residual <= tol) break;
  }
  return c;
}

}  // namespace

ThreeDeviceOptimum optimal_three(double total_batch, Samples rho, double p_tr, double tol,
                                 int grid) {
  const ThreeDeviceProblem prob(total_batch, rho, p_tr);
  ThreeDeviceOptimum out;
  const double b = total_batch;

  auto finish = [&](const Candidate& c) {
    out.deltas = c.x;
    out.multipliers = c.kkt.alpha;
    out.objective = c.objective;
    out.kkt_residual = c.kkt.residual;
    out.complementary_slackness = c.kkt.slackness;
    const double b1 = (b - 2.0 * c.x[0] - c.x[1]) / 3.0;
    out.batches = {b1, b1 + c.x[0], b1 + c.x[0] + c.x[1]};
    return out;
  };

  if (b == 0.0) {
    Candidate c{{0.0, 0.0}, prob.objective(0.0, 0.0), kkt_at(prob, {0.0, 0.0})};
    return finish(c);
  }
  if (grid < 2) throw InvalidConfig("grid", "must be >= 2");

  // warm start: a few best grid points, plus the vertices
  std::vector<std::pair<double, Point>> scored;
  for (int i = 0; i < grid; ++i) {
    const double d1 = (b / 2.0) * i / (grid - 1);
    for (int j = 0; j < grid; ++j) {
      const double d2 = b * j / (grid - 1);
      if (!prob.feasible(d1, d2, 1e-12 * b)) continue;
      const Point p = prob.project(d1, d2);
      scored.emplace_back(prob.objective(p[0], p[1]), p);
    }
  }
  const std::size_t keep = std::min<std::size_t>(4, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                    scored.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
  std::vector<Point> starts;
  for (std::size_t i = 0; i < keep; ++i) starts.push_back(scored[i].second);
  starts.push_back({0.0, 0.0});
  starts.push_back({b / 2.0, 0.0});
  starts.push_back({0.0, b});

  bool have = false;
  Candidate best{};
  for (const Point& s : starts) {
    const Candidate c = solve_from(prob, s, tol);
    const bool ok = c.kkt.residual <= tol;
    const bool best_ok = have && best.kkt.residual <= tol;
    if (!have || (ok && !best_ok) || (ok == best_ok && c.objective < best.objective)) {
      best = c;
      have = true;
    }
  }
  if (best.kkt.residual > tol)
    throw NoConvergence("three-device KKT residual " + std::to_string(best.kkt.residual) +
                        " exceeds tolerance");
  return finish(best);
}

// ---------------------------------------------------------------------------

DeltaSweep optimize_delta(int n_devices, Samples total_batch, Samples rho, double p_tr,
                          std::vector<Samples> candidates, std::int64_t trials,
                          std::uint64_t seed, Protocol protocol,
                          std::optional<std::int64_t> iterations) {
  if (candidates.empty()) throw InvalidConfig("deltas", "candidate list is empty");
  if (std::any_of(candidates.begin(), candidates.end(), [](Samples d) { return d < 0; }))
    throw InvalidConfig("deltas", "gaps must be >= 0");
  const std::int64_t k = iterations.value_or(1);
  if (k < 1) throw InvalidConfig("iterations", "must be >= 1");

  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  DeltaSweep sweep;
  for (Samples delta : candidates) {
    const BatchAllocation alloc = stepwise_allocation(n_devices, total_batch, delta);
    DeltaRow row;
    row.delta = delta;
    if (protocol == Protocol::tdma) {
      row.expected_iter = static_cast<double>(tdma_iter_time(alloc, rho));
    } else {
      const RaIterEstimate est =
          expected_iter_ra(alloc, rho, p_tr, trials, derive_seed(seed, static_cast<std::uint64_t>(delta)));
      row.expected_iter = est.timing.expected_iter;
      row.iter_std_err = est.estimate.std_err;
    }
    row.expected_completion = static_cast<double>(k) * row.expected_iter;
    row.completion_std_err = static_cast<double>(k) * row.iter_std_err;
    sweep.rows.push_back(row);
  }
  const auto best = std::min_element(
      sweep.rows.begin(), sweep.rows.end(), [](const DeltaRow& l, const DeltaRow& r) {
        return l.expected_completion < r.expected_completion;
      });
  sweep.best_delta = best->delta;
  return sweep;
}

}  // namespace wfl
