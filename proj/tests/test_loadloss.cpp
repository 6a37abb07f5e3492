#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gridrestore/dynamics.hpp"
#include "gridrestore/errors.hpp"
#include "gridrestore/generator.hpp"
#include "gridrestore/loadloss.hpp"
#include "support.hpp"

namespace gridrestore {
namespace {

using testing::bus_of;
using testing::line_of;

LossSettings tiny_settings() { return LossSettings{0.25, true, "approx"}; }

TEST(EstimateLv, Tiny6BothFaults) {
  const auto inst = tiny6_instance();
  const auto& net = inst.network;
  const std::vector<LineId> faults{line_of(net, "L23"), line_of(net, "L45")};
  // Buses 3..6 dark: (20*5 + 20*5 + 20*20 + 20*5) * 0.25.
  EXPECT_DOUBLE_EQ(estimate_lv(net, faults, {}, net.nominal_inputs(), {}, tiny_settings()), 175.0);
}

TEST(EstimateLv, Tiny6MegAtBusFive) {
  const auto inst = tiny6_instance();
  const auto& net = inst.network;
  const std::vector<LineId> faults{line_of(net, "L23"), line_of(net, "L45")};
  const std::vector<MegInjection> meg{{bus_of(net, "5"), 40.0}};
  EXPECT_DOUBLE_EQ(estimate_lv(net, faults, meg, net.nominal_inputs(), {}, tiny_settings()), 50.0);
  // A MEG too small for both buses serves the costlier one first.
  const std::vector<MegInjection> small{{bus_of(net, "5"), 20.0}};
  EXPECT_DOUBLE_EQ(estimate_lv(net, faults, small, net.nominal_inputs(), {}, tiny_settings()), 75.0);
}

TEST(EstimateLv, NoFaultsNoLoss) {
  const auto inst = tiny6_instance();
  EXPECT_DOUBLE_EQ(estimate_lv(inst.network, {}, {}, inst.network.nominal_inputs(), {}, tiny_settings()), 0.0);
}

TEST(EstimateLv, UnweightedCountsKilowatts) {
  const auto inst = tiny6_instance();
  const auto& net = inst.network;
  const std::vector<LineId> faults{line_of(net, "L23"), line_of(net, "L45")};
  auto settings = tiny_settings();
  settings.lv_weighted = false;
  EXPECT_DOUBLE_EQ(estimate_lv(net, faults, {}, net.nominal_inputs(), {}, settings), 20.0);
}

TEST(EstimateLv, WeakLineDropsTheLoadItCannotCarry) {
  // L12 carries at most 15 kW: bus 2 (20 kW, first in priority) cannot be fed,
  // bus 3 (10 kW) can.
  const auto net = testing::make_network({0, 20, 10}, {1, 10, 5}, {{0, 1, false, 15.0}, {1, 2}});
  LoadLossEstimator estimator(net, tiny_settings());
  const auto result = estimator.dispatch({}, {}, net.nominal_inputs(), {});
  EXPECT_DOUBLE_EQ(result.served[1], 0.0);
  EXPECT_DOUBLE_EQ(result.served[2], 10.0);
  EXPECT_DOUBLE_EQ(result.cost, 20.0 * 10.0 * 0.25);
}

TEST(EstimateLv, MeshedFeederOpensATieAndKeepsEveryBusFed) {
  const auto net = testing::tiny6_with_tie();
  LoadLossEstimator estimator(net, tiny_settings());
  const auto result = estimator.dispatch({}, {}, net.nominal_inputs(), {});
  EXPECT_TRUE(is_radial(net, result.line_status));
  EXPECT_DOUBLE_EQ(result.cost, 0.0);
  // With L23 faulted the tie feeds buses 3..6 from bus 2.
  const std::vector<LineId> faults{line_of(net, "L23")};
  EXPECT_DOUBLE_EQ(estimator.estimate_lv(faults, {}, net.nominal_inputs(), {}), 0.0);
}

// Independent check of every dispatch invariant on the generated feeder.
TEST(Dispatch, ReportsAConsistentBalance) {
  const auto inst = generate_instance(GeneratorSpec{});
  const auto& net = inst.network;
  auto state = initial_state(inst);
  LoadLossEstimator estimator(net, LossSettings{inst.settings.delta_t, true, "approx"});
  const auto d = estimator.dispatch_state(state);
  ASSERT_TRUE(is_radial(net, d.line_status));
  double cost = 0.0;
  std::vector<double> island_net(net.bus_count(), 0.0);
  for (std::size_t b = 0; b < net.bus_count(); ++b) {
    ASSERT_GE(d.served[b], -1e-12);
    ASSERT_LE(d.served[b], d.demand[b] + 1e-9);
    cost += net.buses()[b].shed_cost * (d.demand[b] - d.served[b]) * inst.settings.delta_t;
    island_net[d.island_of[b]] -= d.served[b];
  }
  for (std::size_t i = 0; i < net.sources().size(); ++i) {
    ASSERT_LE(d.source_output[i], state.inputs.source_caps[i] + 1e-9);
    island_net[d.island_of[net.sources()[i].bus.index()]] += d.source_output[i];
  }
  for (std::size_t i = 0; i < net.storages().size(); ++i) {
    const auto k = d.island_of[net.storages()[i].bus.index()];
    island_net[k] += d.storage_discharge[i] - d.storage_charge[i];
    ASSERT_LE(d.storage_discharge[i], net.storages()[i].power_max + 1e-9);
  }
  for (const double r : island_net) EXPECT_NEAR(r, 0.0, 1e-6);
  EXPECT_NEAR(d.cost, cost, 1e-6 * std::max(1.0, cost));
  for (const auto f : state.active_faults()) EXPECT_FALSE(d.line_status.closed(f));
}

// Serving loads in some order until supply runs out covers every vertex of
// the fractional allocation polytope, so the cheapest order is optimal.
double best_unserved_cost(double supply, const std::vector<LoadDemand>& loads) {
  std::vector<std::size_t> order(loads.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double left = supply;
    double cost = 0.0;
    for (const auto i : order) {
      const double s = std::min(loads[i].demand, left);
      left -= s;
      cost += loads[i].shed_cost * (loads[i].demand - s);
    }
    best = std::min(best, cost);
  } while (std::next_permutation(order.begin(), order.end()));
  return best;
}

TEST(AllocateIsland, MatchesEnumerationOnSmallIslands) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> count(1, 4);
  std::uniform_real_distribution<double> demand(0.0, 50.0);
  std::uniform_int_distribution<int> cost(1, 6);  // small range forces ties
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<LoadDemand> loads(static_cast<std::size_t>(count(rng)));
    for (std::size_t i = 0; i < loads.size(); ++i)
      loads[i] = {BusId{i}, std::round(demand(rng)), static_cast<double>(cost(rng))};
    const double supply = std::round(demand(rng) * 2.0);
    const auto served = allocate_island(supply, loads);
    double used = 0.0;
    double unserved = 0.0;
    for (std::size_t i = 0; i < loads.size(); ++i) {
      if (served[i] < -1e-12 || served[i] > loads[i].demand + 1e-12) ++violations;
      used += served[i];
      unserved += loads[i].shed_cost * (loads[i].demand - served[i]);
    }
    if (used > supply + 1e-9) ++violations;
    if (std::abs(unserved - best_unserved_cost(supply, loads)) > 1e-9) ++violations;
    // Priority: while a load is short, no cheaper load (ties: higher id) gets power.
    for (std::size_t i = 0; i < loads.size(); ++i) {
      if (served[i] >= loads[i].demand) continue;
      for (std::size_t j = 0; j < loads.size(); ++j) {
        const bool lower = loads[j].shed_cost < loads[i].shed_cost ||
                           (loads[j].shed_cost == loads[i].shed_cost && loads[j].bus > loads[i].bus);
        if (lower && served[j] > 0.0) ++violations;
      }
    }
  }
  EXPECT_EQ(violations, 0);
}

class GeneratedFeeder : public ::testing::Test {
 protected:
  Instance inst = generate_instance(GeneratorSpec{});
  const Network& net = inst.network;
  LossSettings settings{inst.settings.delta_t, true, "approx"};
  std::vector<LineId> all_faults() const {
    std::vector<LineId> out;
    for (const auto& f : inst.faults) out.push_back(f.line);
    return out;
  }
};

TEST_F(GeneratedFeeder, MonotoneInTheFaultSet) {
  LoadLossEstimator estimator(net, settings);
  const auto inputs = inst.forecast(0);
  const auto faults = all_faults();
  std::mt19937_64 rng(5);
  int violations = 0;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<LineId> subset;
    for (const auto f : faults)
      if (rng() % 2) subset.push_back(f);
    const double base = estimator.estimate_lv(subset, {}, inputs, {});
    for (const auto f : faults) {
      if (std::find(subset.begin(), subset.end(), f) != subset.end()) continue;
      auto more = subset;
      more.push_back(f);
      if (estimator.estimate_lv(more, {}, inputs, {}) < base - 1e-9) ++violations;
    }
  }
  EXPECT_EQ(violations, 0);
}

TEST_F(GeneratedFeeder, MegsNeverIncreaseTheLoss) {
  LoadLossEstimator estimator(net, settings);
  const auto inputs = inst.forecast(0);
  const auto faults = all_faults();
  std::mt19937_64 rng(9);
  int violations = 0;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<LineId> subset;
    for (const auto f : faults)
      if (rng() % 3) subset.push_back(f);
    std::vector<MegInjection> megs;
    double before = estimator.estimate_lv(subset, megs, inputs, {});
    for (int k = 0; k < 3; ++k) {
      megs.push_back({net.access_points()[rng() % net.access_points().size()], 50.0 + 50.0 * k});
      const double after = estimator.estimate_lv(subset, megs, inputs, {});
      if (after > before + 1e-9) ++violations;
      before = after;
    }
  }
  EXPECT_EQ(violations, 0);
}

TEST_F(GeneratedFeeder, RepairedSubsetsMatchAFreshEstimate) {
  LoadLossEstimator fresh(net, settings);
  LoadLossEstimator incremental(net, settings);
  const auto inputs = inst.forecast(0);
  const auto faults = all_faults();
  const std::vector<MegInjection> megs{{net.access_points()[0], 120.0}};
  (void)incremental.prepare_repairs(faults, megs, inputs, {});
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<LineId> repaired;
    std::vector<LineId> remaining;
    for (const auto f : faults) (rng() % 5 == 0 ? repaired : remaining).push_back(f);
    // Bitwise equal: the incremental path must not perturb rankings.
    ASSERT_EQ(incremental.lv_repairing(repaired), fresh.estimate_lv(remaining, megs, inputs, {}));
  }
  EXPECT_THROW((void)incremental.lv_repairing(std::vector<LineId>{LineId{std::size_t{0}}}), ValidationError);
}

TEST(RepairedSubsets, FallBackWhenCapacityBinds) {
  // Every line is weak, so merged islands hit the capacity path.
  std::vector<double> demand{0, 20, 20, 20, 20, 20};
  std::vector<double> cost{1, 10, 5, 5, 20, 5};
  const auto net = testing::make_network(demand, cost,
                                         {{0, 1, false, 30.0}, {1, 2, false, 30.0}, {2, 3}, {3, 4}, {4, 5}}, 1000.0,
                                         {1, 4});
  const LossSettings settings{0.25, true, "approx"};
  const std::vector<LineId> faults{LineId{std::size_t{1}}, LineId{std::size_t{3}}};
  LoadLossEstimator fresh(net, settings);
  LoadLossEstimator incremental(net, settings);
  const auto inputs = net.nominal_inputs();
  (void)incremental.prepare_repairs(faults, {}, inputs, {});
  for (const auto& repaired : std::vector<std::vector<LineId>>{{}, {faults[0]}, {faults[1]}, faults}) {
    std::vector<LineId> remaining;
    for (const auto f : faults)
      if (std::find(repaired.begin(), repaired.end(), f) == repaired.end()) remaining.push_back(f);
    EXPECT_EQ(incremental.lv_repairing(repaired), fresh.estimate_lv(remaining, {}, inputs, {}));
  }
}

TEST_F(GeneratedFeeder, StatusEvaluationMatchesTheFullPipeline) {
  LoadLossEstimator estimator(net, settings);
  LoadLossEstimator reference(net, settings);
  const auto inputs = inst.forecast(0);
  const auto faults = all_faults();
  const auto status = estimator.radial_status(faults, {}, inputs);
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<MegInjection> megs;
    for (int k = 0; k < 2; ++k)
      if (rng() % 2) megs.push_back({net.access_points()[rng() % net.access_points().size()], 100.0 + 50.0 * k});
    const double expected = reference.estimate_lv(faults, megs, inputs, {});
    ASSERT_NEAR(estimator.lv_on_status(status, megs, inputs, {}), expected, 1e-9 * std::max(1.0, expected));
  }
}

TEST(StorageRule, ChargesFromSurplusAndSpreadsEnergyOverTheOutage) {
  const std::vector<IslandBalance> islands{{100.0, 60.0}, {0.0, 50.0}};
  const std::vector<StorageUnit> units{{"S1", BusId{std::size_t{0}}, 10.0, 110.0, 30.0, 0.9, 60.0},
                                       {"S2", BusId{std::size_t{1}}, 10.0, 110.0, 30.0, 0.9, 60.0},
                                       {"S3", BusId{std::size_t{1}}, 10.0, 110.0, 30.0, 1.0, 12.0}};
  const std::vector<std::uint32_t> at{0, 1, 1};
  const std::vector<StorageState> states{{StorageId{std::size_t{0}}, 100.0},
                                         {StorageId{std::size_t{1}}, 60.0},
                                         {StorageId{std::size_t{2}}, 12.0}};
  const std::vector<double> outage{1.0, 8.0};
  const auto plan = storage_base_dispatch(islands, units, at, states, outage, 0.25);
  // Island 0: surplus 40, headroom (110-100)/(0.9*0.25) = 44.4, power 30.
  EXPECT_DOUBLE_EQ(plan[0], -30.0);
  // Island 1: (60-10)*0.9 / (8*0.25) = 22.5 kW.
  EXPECT_DOUBLE_EQ(plan[1], 22.5);
  // (12-10)*1 / 2 = 1 kW; the deficit left is 27.5.
  EXPECT_DOUBLE_EQ(plan[2], 1.0);
}

}  // namespace
}  // namespace gridrestore
