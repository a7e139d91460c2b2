#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "oracles.hpp"
#include "wfl/error.hpp"
#include "wfl/rng.hpp"
#include "wfl/simulator.hpp"
#include "wfl/timing_ra.hpp"
#include "wfl/timing_tdma.hpp"

using namespace wfl;

TEST(SimulateTdma, HandTrace) {
  const SlotTrace t = simulate_iter_tdma(BatchAllocation({2, 4, 6}, 12), 2);
  EXPECT_EQ(t.iter_time, 4);
  EXPECT_EQ(t.delivery_slots, (std::vector<Slots>{2, 3, 4}));
  ASSERT_EQ(t.events.size(), 4u);
  EXPECT_EQ(t.events[0].outcome, SlotOutcome::idle);
  EXPECT_EQ(t.events[3].transmitters, (std::vector<int>{2}));
}

TEST(SimulateTdma, SingleAndEqual) {
  EXPECT_EQ(simulate_iter_tdma(BatchAllocation({37}, 37), 5).iter_time, 8 + 1);
  EXPECT_EQ(simulate_iter_tdma(BatchAllocation({9, 9, 9, 9}, 36), 3).iter_time, 3 + 4);
}

TEST(SimulateRa, LoneCertainDevice) {
  Rng rng(1);
  const SlotTrace t = simulate_iter_ra(BatchAllocation({37}, 37), 5, 1.0, rng);
  EXPECT_EQ(t.iter_time, 8 + 1);
}

TEST(SimulateRa, TraceIsConsistent) {
  Rng rng(2);
  const BatchAllocation a({5, 10, 30}, 45);
  const SlotTrace t = simulate_iter_ra(a, 5, 0.3, rng);
  ASSERT_EQ(static_cast<Slots>(t.events.size()), t.iter_time);
  std::vector<bool> delivered(3, false);
  for (const SlotEvent& e : t.events) {
    int ready = 0;
    for (int n = 0; n < 3; ++n) ready += (compute_time(a[n], 5) < e.slot && !delivered[n]);
    ASSERT_EQ(e.contenders, ready);
    const auto k = e.transmitters.size();
    ASSERT_EQ(e.outcome, k == 0 ? SlotOutcome::idle : k == 1 ? SlotOutcome::success : SlotOutcome::collision);
    if (k == 1) {
      delivered[e.transmitters[0]] = true;
      ASSERT_EQ(t.delivery_slots[e.transmitters[0]], e.slot);
    }
  }
  EXPECT_EQ(*std::max_element(t.delivery_slots.begin(), t.delivery_slots.end()), t.iter_time);
}

TEST(SimulateRa, SlotCap) {
  Rng rng(3);
  EXPECT_THROW(simulate_iter_ra(BatchAllocation({10, 10}, 20), 1, 1e-6, rng, 1000), SlotCapExceeded);
}

TEST(SimulateRa, EqualBatchesMean) {
  const McEstimate e = mc_iter_time_ra(BatchAllocation({50, 50}, 100), 5, 0.2, 1'000'000, 4);
  EXPECT_LE(std::abs(e.mean - (10 + 8.125)), 3.0 * e.std_err);
}

TEST(SimulateRa, SingularRateMatchesFiniteSum) {
  const BatchAllocation a({5, 10, 15}, 30);
  const double closed = expected_iter_ra_closed(a, 5, 0.5).expected_iter;
  EXPECT_NEAR(closed, oracle::expected_ra_iter({5, 10, 15}, 5, 0.5), 1e-12);
  const McEstimate e = mc_iter_time_ra(a, 5, 0.5, 1'000'000, 6);
  EXPECT_LE(std::abs(e.mean - closed), 3.0 * e.std_err);
}

TEST(SimulateRa, Deterministic) {
  const BatchAllocation a({5, 10, 30}, 45);
  EXPECT_EQ(mc_iter_time_ra(a, 5, 0.3, 1000, 7).mean, mc_iter_time_ra(a, 5, 0.3, 1000, 7).mean);
}

TEST(SimulateRa, PerSlotSuccessFrequency) {
  std::map<int, std::pair<long, long>> tally;  // contenders -> (slots, successes)
  const BatchAllocation a({0, 10, 20, 30, 40, 50}, 150);
  for (std::uint64_t t = 0; t < 20000; ++t) {
    Rng rng = Rng::substream(11, t);
    for (const SlotEvent& e : simulate_iter_ra(a, 10, 0.25, rng).events) {
      if (e.contenders == 0) continue;
      auto& [slots, wins] = tally[e.contenders];
      ++slots;
      wins += e.outcome == SlotOutcome::success;
    }
  }
  for (const auto& [m, counts] : tally) {
    if (counts.first < 1000) continue;
    const double p = oracle::one_of(m, 0.25);
    const double freq = static_cast<double>(counts.second) / counts.first;
    EXPECT_LE(std::abs(freq - p), 3.0 * std::sqrt(p * (1 - p) / counts.first)) << "m=" << m;
  }
}

TEST(SimulateRa, InterDeliveryGapsAreGeometric) {
  // Equal batches: after the common ready slot the contender count drops by
  // one per delivery, so each gap is geometric with the matching p_suc.
  const BatchAllocation a({20, 20, 20}, 60);
  const double p = 0.3;
  std::map<int, std::vector<long>> gaps;
  for (std::uint64_t t = 0; t < 100000; ++t) {
    Rng rng = Rng::substream(13, t);
    const SlotTrace tr = simulate_iter_ra(a, 10, p, rng);
    Slots last = 2;  // devices become ready in slot 3
    int left = 3;
    for (const SlotEvent& e : tr.events) {
      if (e.outcome != SlotOutcome::success) continue;
      gaps[left].push_back(e.slot - last);
      last = e.slot;
      --left;
    }
  }
  for (const auto& [m, xs] : gaps) {
    const double s = oracle::one_of(m, p);
    const int bins = 12;  // 1..11 and a tail bin
    std::vector<double> obs(bins, 0.0);
    for (long g : xs) obs[std::min<long>(g, bins) - 1] += 1;
    double chi2 = 0.0;
    double tail = 1.0;
    for (int k = 1; k <= bins; ++k) {
      const double prob = k < bins ? std::pow(1 - s, k - 1) * s : tail;
      tail -= prob;
      const double expect = prob * xs.size();
      chi2 += (obs[k - 1] - expect) * (obs[k - 1] - expect) / expect;
    }
    const boost::math::chi_squared dist(bins - 1);
    EXPECT_LT(chi2, boost::math::quantile(dist, 0.99)) << "m=" << m;
  }
}

TEST(SimulateCompletion, TdmaIsExactMultiple) {
  Rng rng(1);
  const BatchAllocation a({6, 8, 10}, 24);
  EXPECT_EQ(simulate_completion(Protocol::tdma, a, 2, 0.2, 19, rng), 19 * 6);
}

TEST(SimulateCompletion, OneIterationMatchesSingleSimulator) {
  const BatchAllocation a({245, 255}, 500);
  Rng r1(8), r2(8);
  EXPECT_EQ(simulate_completion(Protocol::ra, a, 5, 0.2, 1, r1), simulate_iter_ra(a, 5, 0.2, r2).iter_time);
}

TEST(SimulateCompletion, RaTotalIsLinear) {
  const BatchAllocation a({245, 255}, 500);
  RunningStats st;
  for (std::uint64_t t = 0; t < 20000; ++t) {
    Rng rng = Rng::substream(21, t);
    st.add(static_cast<double>(simulate_completion(Protocol::ra, a, 5, 0.2, 19, rng)));
  }
  const McEstimate e = st.estimate(21);
  EXPECT_LE(std::abs(e.mean - 19 * 58.0), 3.0 * e.std_err);
}

TEST(WriteTrace, Format) {
  SlotTrace t;
  t.events = {{1, 0, {}, SlotOutcome::idle}, {2, 2, {0, 1}, SlotOutcome::collision},
              {3, 2, {1}, SlotOutcome::success}};
  std::ostringstream out;
  write_trace(out, t);
  EXPECT_EQ(out.str(), "slot,transmitters,outcome\n1,,idle\n2,1;2,collision\n3,2,success\n");
}
