#include <gtest/gtest.h>

#include <numeric>

#include "oracles.hpp"
#include "wfl/allocation.hpp"
#include "wfl/error.hpp"
#include "wfl/rng.hpp"
#include "wfl/timing_ra.hpp"
#include "wfl/timing_tdma.hpp"

using namespace wfl;

namespace {

std::vector<Samples> sizes_of(const BatchAllocation& a) { return {a.sizes().begin(), a.sizes().end()}; }

}  // namespace

TEST(Stepwise, HandTraces) {
  EXPECT_EQ(sizes_of(stepwise_allocation(3, 12, 2)), (std::vector<Samples>{2, 4, 6}));
  EXPECT_EQ(sizes_of(stepwise_allocation(3, 24, 2)), (std::vector<Samples>{6, 8, 10}));
  EXPECT_EQ(sizes_of(stepwise_allocation(4, 8, 8)), (std::vector<Samples>{0, 0, 0, 8}));
  EXPECT_EQ(sizes_of(stepwise_allocation(3, 10, 2)), (std::vector<Samples>{0, 4, 6}));
}

TEST(Stepwise, ZeroGapIsEqualSplit) {
  EXPECT_EQ(sizes_of(stepwise_allocation(4, 12, 0)), (std::vector<Samples>{3, 3, 3, 3}));
  EXPECT_EQ(sizes_of(stepwise_allocation(4, 14, 0)), (std::vector<Samples>{3, 3, 4, 4}));
}

TEST(Stepwise, RejectsBadInput) {
  EXPECT_THROW(stepwise_allocation(0, 10, 1), InvalidConfig);
  EXPECT_THROW(stepwise_allocation(3, 10, -1), InvalidConfig);
}

TEST(Stepwise, GapBeyondBudgetLoadsLastDevice) {
  EXPECT_EQ(sizes_of(stepwise_allocation(3, 10, 11)), (std::vector<Samples>{0, 0, 10}));
}

TEST(Stepwise, AlwaysAscendingAndSummed) {
  Rng rng(6);
  for (int trial = 0; trial < 3000; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(12));
    const Samples b = static_cast<Samples>(rng.below(3000));
    const Samples delta = b == 0 ? 0 : static_cast<Samples>(rng.below(static_cast<std::uint64_t>(b) + 1));
    const auto a = stepwise_allocation(n, b, delta);
    const auto s = sizes_of(a);
    ASSERT_EQ(static_cast<int>(s.size()), n);
    ASSERT_TRUE(std::is_sorted(s.begin(), s.end()));
    ASSERT_EQ(std::accumulate(s.begin(), s.end(), Samples{0}), b);
    ASSERT_GE(s.front(), 0);
  }
}

TEST(Stepwise, StaircaseReachesTdmaBound) {
  for (Samples m = 1; m <= 10; ++m) {
    for (int n = 2; n <= 8; ++n) {
      for (Samples rho : {1, 2, 5, 10}) {
        const Samples b = rho * (m * n + n * (n + 1) / 2);
        const auto a = stepwise_allocation(n, b, rho);
        for (int i = 0; i < n; ++i) ASSERT_EQ(a[i], rho * (m + i + 1));
        ASSERT_EQ(tdma_iter_time(a, rho), m + n + 1);
        ASSERT_EQ(tdma_lower_bound(n, b, rho), m + n + 1);
      }
    }
  }
}

TEST(Stepwise, NothingBeatsItUnderTdma) {
  for (int n : {2, 3}) {
    for (Samples rho : {1, 2}) {
      for (Samples b = rho; b <= 30; ++b) {
        const Slots mine = tdma_iter_time(stepwise_allocation(n, b, rho), rho);
        oracle::for_each_ascending(n, b, [&](const std::vector<Samples>& s) {
          ASSERT_GE(oracle::tdma_slots(s, rho), mine) << "n=" << n << " b=" << b;
        });
      }
    }
  }
}

TEST(OptimalTwo, WorkedCase) {
  const TwoDeviceOptimum opt = optimal_two(500, 5, 0.2);
  EXPECT_EQ(opt.case_tag, TwoDeviceCase::interior);
  EXPECT_NEAR(opt.delta, 7.4533, 1e-3);
  EXPECT_NEAR(opt.b1, 246.273, 1e-3);
  EXPECT_NEAR(opt.b2, 253.727, 1e-3);
  EXPECT_NEAR(opt.b1 + opt.b2, 500.0, 1e-12);
}

TEST(OptimalTwo, GapIsPositiveForEveryRate) {
  // -ln(1 - p) > p > p(1 - p), so the stationary point never falls below zero
  // and the equal-split branch only guards rounding.
  for (int i = 1; i < 1000; ++i) EXPECT_GT(optimal_two(1'000'000, 3, i / 1000.0).delta, 0.0);
}

TEST(OptimalTwo, SmallBudgetGoesToOneDevice) {
  const TwoDeviceOptimum opt = optimal_two(5, 5, 0.2);
  EXPECT_EQ(opt.case_tag, TwoDeviceCase::degenerate);
  EXPECT_EQ(sizes_of(round_two(opt, 5)), (std::vector<Samples>{0, 5}));
}

TEST(OptimalTwo, MatchesFineGrid) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const Samples b = 20 + static_cast<Samples>(rng.below(2000));
    const Samples rho = 1 + static_cast<Samples>(rng.below(10));
    const double p = 0.02 + 0.9 * rng.uniform();
    const double step = 0.001 * static_cast<double>(b);
    double best = std::numeric_limits<double>::infinity(), arg = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double d = i * step;
      const double g = oracle::two_device_time(d, static_cast<double>(b), static_cast<double>(rho), p);
      if (g < best) best = g, arg = d;
    }
    const TwoDeviceOptimum opt = optimal_two(b, rho, p);
    ASSERT_LE(std::abs((opt.b2 - opt.b1) - arg), step + 1e-9) << "b=" << b << " rho=" << rho << " p=" << p;
  }
}

TEST(ThreeDeviceProblem, ObjectiveIsIterationTimeAtIntegerTimes) {
  // With gaps and the smallest batch all multiples of rho the relaxed
  // objective has no rounding and must equal the slot-level expectation.
  for (double p : {0.1, 0.2, 0.5, 0.8}) {
    for (auto [b1, d1, d2] : {std::array<Samples, 3>{10, 5, 15}, {0, 0, 0}, {20, 0, 10}, {5, 25, 0}}) {
      const Samples rho = 5;
      const std::vector<Samples> s = {b1, b1 + d1, b1 + d1 + d2};
      const Samples total = s[0] + s[1] + s[2];
      const ThreeDeviceProblem prob(static_cast<double>(total), rho, p);
      EXPECT_NEAR(prob.objective(static_cast<double>(d1), static_cast<double>(d2)),
                  oracle::expected_ra_iter(s, rho, p), 1e-9)
          << "p=" << p << " b1=" << b1;
    }
  }
}

TEST(ThreeDeviceProblem, GradientMatchesFiniteDifference) {
  for (double p : {0.15, 0.5, 0.6}) {
    const ThreeDeviceProblem prob(600, 5, p);
    for (auto [x, y] : {std::pair{3.0, 7.0}, {40.0, 1.0}, {0.5, 100.0}}) {
      const auto g = prob.gradient(x, y);
      const double h = 1e-5;
      EXPECT_NEAR(g[0], (prob.objective(x + h, y) - prob.objective(x - h, y)) / (2 * h), 1e-6);
      EXPECT_NEAR(g[1], (prob.objective(x, y + h) - prob.objective(x, y - h)) / (2 * h), 1e-6);
    }
  }
}

TEST(OptimalThree, EmptyBudget) {
  const ThreeDeviceOptimum opt = optimal_three(0, 5, 0.2);
  EXPECT_EQ(opt.deltas[0], 0.0);
  EXPECT_EQ(opt.deltas[1], 0.0);
}

TEST(OptimalThree, MatchesHalfSampleGrid) {
  const double b = 600;
  const ThreeDeviceProblem prob(b, 5, 0.2);
  double best = std::numeric_limits<double>::infinity();
  std::array<double, 2> arg{};
  for (double d1 = 0; 2 * d1 <= b; d1 += 0.5) {
    for (double d2 = 0; 2 * d1 + d2 <= b; d2 += 0.5) {
      const double v = prob.objective(d1, d2);
      if (v < best) best = v, arg = {d1, d2};
    }
  }
  const ThreeDeviceOptimum opt = optimal_three(b, 5, 0.2);
  EXPECT_LE(opt.objective, best + 1e-12);
  EXPECT_LE(std::abs(opt.deltas[0] - arg[0]), 0.5);
  EXPECT_LE(std::abs(opt.deltas[1] - arg[1]), 0.5);
  EXPECT_LE(opt.kkt_residual, 1e-6);
  EXPECT_LE(opt.complementary_slackness, 1e-6);
  EXPECT_NEAR(opt.batches[0] + opt.batches[1] + opt.batches[2], b, 1e-9);
}

TEST(OptimalThree, HeavyContentionPushesGapsPositive) {
  for (double p : {0.9, 0.95, 0.99}) {
    const ThreeDeviceOptimum opt = optimal_three(3000, 5, p);
    EXPECT_GT(opt.deltas[0], 0.0) << p;
    EXPECT_GT(opt.deltas[1], 0.0) << p;
  }
}

TEST(OptimalThree, SingularRateIsFine) {
  const ThreeDeviceOptimum opt = optimal_three(600, 5, 0.5);
  EXPECT_LE(opt.kkt_residual, 1e-6);
}

TEST(OptimizeDelta, TwoDevicePicksRoundedOptimum) {
  const auto star = static_cast<Samples>(std::llround(optimal_two(500, 5, 0.2).delta));
  const DeltaSweep s = optimize_delta(2, 500, 5, 0.2, {0, star}, 1, 1);
  EXPECT_EQ(s.best_delta, star);
  EXPECT_EQ(s.rows.size(), 2u);
}

TEST(OptimizeDelta, SingleCandidate) {
  const DeltaSweep s = optimize_delta(4, 100, 5, 0.2, {20}, 1000, 1);
  EXPECT_EQ(s.best_delta, 20);
  ASSERT_EQ(s.rows.size(), 1u);
}

TEST(OptimizeDelta, OrderDoesNotMatter) {
  const DeltaSweep a = optimize_delta(6, 600, 5, 0.2, {0, 10, 20, 30}, 5000, 9);
  const DeltaSweep b = optimize_delta(6, 600, 5, 0.2, {30, 10, 0, 20}, 5000, 9);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].delta, b.rows[i].delta);
    EXPECT_EQ(a.rows[i].expected_iter, b.rows[i].expected_iter);
  }
  EXPECT_EQ(a.best_delta, b.best_delta);
}

TEST(OptimizeDelta, TdmaMinimumAtComputeRate) {
  const DeltaSweep s = optimize_delta(5, 5 * 10 * 4 + 10 * 15, 10, 0.2, {0, 5, 10, 15, 20}, 1, 1,
                                      Protocol::tdma, 7);
  const auto at_rho = std::find_if(s.rows.begin(), s.rows.end(), [](const DeltaRow& r) { return r.delta == 10; });
  EXPECT_DOUBLE_EQ(at_rho->expected_iter, static_cast<double>(tdma_lower_bound(5, 350, 10)));
  for (const auto& r : s.rows) {
    EXPECT_GE(r.expected_iter, at_rho->expected_iter);
    EXPECT_EQ(r.iter_std_err, 0.0);
  }
}

TEST(OptimizeDelta, CompletionScalesWithIterations) {
  const DeltaSweep s = optimize_delta(2, 500, 5, 0.2, {10}, 1, 1, Protocol::ra, 19);
  EXPECT_NEAR(s.rows[0].expected_completion, 19 * s.rows[0].expected_iter, 1e-9);
}
