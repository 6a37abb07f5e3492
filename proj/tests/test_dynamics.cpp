#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "gridrestore/dynamics.hpp"
#include "gridrestore/errors.hpp"
#include "gridrestore/generator.hpp"
#include "gridrestore/loadloss.hpp"
#include "gridrestore/rollout.hpp"
#include "gridrestore/scenario.hpp"
#include "support.hpp"

namespace gridrestore {
namespace {

using testing::bus_of;
using testing::line_of;

class Tiny6Dynamics : public ::testing::Test {
 protected:
  Instance inst = tiny6_instance();
  const Network& net = inst.network;
  SystemState state = initial_state(inst);
  LineId l23 = line_of(net, "L23");
  LineId l45 = line_of(net, "L45");
  CrewId crew{std::size_t{0}};
  MegId meg{std::size_t{0}};

  void step() { transition_in_place(net, state, DispatchResult{}, inst.settings.delta_t); }
};

TEST_F(Tiny6Dynamics, InitialStateOpensFaultedLines) {
  EXPECT_EQ(state.active_faults(), (std::vector<LineId>{l23, l45}));
  EXPECT_FALSE(state.line_status.closed(l23));
  EXPECT_FALSE(state.line_status.closed(l45));
  EXPECT_TRUE(state.line_status.closed(line_of(net, "L12")));
  EXPECT_TRUE(state.crews[0].is_free());
  EXPECT_TRUE(std::holds_alternative<DepotId>(state.crews[0].location));
}

TEST_F(Tiny6Dynamics, CrewArrivesRepairsAndFrees) {
  apply_targets(state, net, {{crew, l23}}, {});
  EXPECT_EQ(state.crews[0].remaining_travel, 1);
  step();
  EXPECT_EQ(state.crews[0].line(), l23);
  EXPECT_TRUE(state.crews[0].repairing);
  EXPECT_EQ(state.find_fault(l23)->repair_progress, 0);

  state.decision_due = false;
  step();
  EXPECT_EQ(state.find_fault(l23)->repair_progress, 1);
  EXPECT_TRUE(state.crews[0].repairing);
  EXPECT_FALSE(state.decision_due);

  step();
  EXPECT_EQ(state.find_fault(l23)->repair_progress, 2);
  EXPECT_TRUE(state.find_fault(l23)->repaired);
  EXPECT_EQ(state.active_faults(), (std::vector<LineId>{l45}));
  EXPECT_TRUE(state.line_status.closed(l23));
  EXPECT_FALSE(state.crews[0].repairing);
  EXPECT_FALSE(state.crews[0].target);
  EXPECT_TRUE(state.crews[0].is_free());
  EXPECT_TRUE(state.decision_due);
  EXPECT_EQ(state.period, 3);
}

TEST_F(Tiny6Dynamics, CrewInTransitHasNoLocation) {
  apply_targets(state, net, {{crew, l45}}, {});
  EXPECT_EQ(state.crews[0].remaining_travel, 2);
  step();
  EXPECT_TRUE(state.crews[0].in_transit());
  EXPECT_EQ(state.crews[0].remaining_travel, 1);
  EXPECT_FALSE(state.crews[0].is_free());
  step();
  EXPECT_EQ(state.crews[0].line(), l45);
  EXPECT_TRUE(state.crews[0].repairing);
}

TEST_F(Tiny6Dynamics, ArrivalAtARepairedLineFreesTheCrew) {
  apply_targets(state, net, {{crew, l23}}, {});
  state.find_fault(l23)->repaired = true;
  state.decision_due = false;
  step();
  EXPECT_FALSE(state.crews[0].repairing);
  EXPECT_FALSE(state.crews[0].target);
  EXPECT_TRUE(state.decision_due);
}

TEST_F(Tiny6Dynamics, MegTravelsThenSupplies) {
  const auto bus5 = bus_of(net, "5");
  apply_targets(state, net, {}, {{meg, bus5}});
  EXPECT_EQ(state.megs[0].remaining_travel, 3);  // |4-2| + |0-0.5| = 2.5 at speed 1
  for (int k = 0; k < 2; ++k) {
    step();
    EXPECT_TRUE(state.megs[0].in_transit());
    EXPECT_FALSE(state.megs[0].supplying);
  }
  state.decision_due = false;
  step();
  EXPECT_EQ(state.megs[0].bus(), bus5);
  EXPECT_TRUE(state.megs[0].supplying);
  EXPECT_TRUE(state.decision_due);
  EXPECT_TRUE(state.megs[0].is_free());
}

TEST_F(Tiny6Dynamics, RevealedTimeOverridesTheEstimate) {
  apply_targets(state, net, {{crew, l23}}, {});
  step();
  Observation obs;
  obs.period = state.period;
  obs.revealed_repair_times.emplace_back(l23, 4);
  observe_in_place(state, obs);
  EXPECT_EQ(state.find_fault(l23)->true_repair_time, 4);
  EXPECT_DOUBLE_EQ(state.find_fault(l23)->estimated_repair_time, 4.0);
  for (int k = 0; k < 3; ++k) step();
  EXPECT_FALSE(state.find_fault(l23)->repaired);
  step();
  EXPECT_TRUE(state.find_fault(l23)->repaired);
}

TEST_F(Tiny6Dynamics, NewFaultOpensItsLine) {
  Observation obs;
  obs.period = 0;
  FaultRecord f;
  f.line = line_of(net, "L56");
  f.estimated_repair_time = 3.0;
  obs.new_faults.push_back(f);
  state.decision_due = false;
  observe_in_place(state, obs);
  EXPECT_TRUE(state.is_faulted(f.line));
  EXPECT_FALSE(state.line_status.closed(f.line));
  EXPECT_TRUE(state.decision_due);
  EXPECT_THROW(observe_in_place(state, obs), DynamicsError);  // same line twice
}

TEST_F(Tiny6Dynamics, RejectsInconsistentUpdates) {
  Observation wrong_period;
  wrong_period.period = 5;
  EXPECT_THROW(observe_in_place(state, wrong_period), DynamicsError);

  Observation no_crew;
  no_crew.period = 0;
  no_crew.revealed_repair_times.emplace_back(l23, 3);
  EXPECT_THROW(observe_in_place(state, no_crew), DynamicsError);

  EXPECT_THROW(apply_targets(state, net, {{crew, line_of(net, "L12")}}, {}), DynamicsError);
  EXPECT_THROW(apply_targets(state, net, {}, {{meg, bus_of(net, "3")}}), DynamicsError);
  apply_targets(state, net, {{crew, l23}}, {});
  step();
  EXPECT_THROW(apply_targets(state, net, {{crew, l45}}, {}), DynamicsError);  // busy repairing
}

TEST(StorageDynamics, EnergyFollowsChargeAndDischarge) {
  auto inst = generate_instance(GeneratorSpec{});
  ASSERT_FALSE(inst.network.storages().empty());
  auto state = initial_state(inst);
  const auto& u = inst.network.storages()[0];
  const double e0 = state.storages[0].energy;
  DispatchResult d;
  d.storage_discharge.assign(inst.network.storages().size(), 0.0);
  d.storage_charge.assign(inst.network.storages().size(), 0.0);
  d.storage_discharge[0] = 10.0;
  transition_in_place(inst.network, state, d, 0.25);
  EXPECT_NEAR(state.storages[0].energy, e0 - 10.0 / u.efficiency * 0.25, 1e-12);

  d.storage_discharge[0] = 0.0;
  d.storage_charge[0] = 8.0;
  const double e1 = state.storages[0].energy;
  transition_in_place(inst.network, state, d, 0.25);
  EXPECT_NEAR(state.storages[0].energy, e1 + u.efficiency * 8.0 * 0.25, 1e-12);

  d.storage_charge[0] = 0.0;
  d.storage_discharge[0] = 1e6;
  EXPECT_THROW(transition_in_place(inst.network, state, d, 0.25), DynamicsError);
}

// Random trajectories on a small generated feeder; every transition is
// checked against the update laws from the pre-transition state.
TEST(TransitionProperties, ThousandRandomStates) {
  GeneratorSpec spec;
  spec.buses = 30;
  spec.faults = 6;
  spec.crews = 2;
  spec.megs = 1;
  spec.staged_faults = 2;
  const auto inst = generate_instance(spec);
  const auto& net = inst.network;
  const LossSettings settings{inst.settings.delta_t, true, "approx"};
  std::mt19937_64 rng(11);
  int checked = 0;
  for (std::uint64_t seed = 1; checked < 1000; ++seed) {
    const auto truth = ground_truth_scenario(inst, seed);
    auto state = initial_state(inst);
    observe_in_place(state, truth.observe(state));
    for (int t = 0; t < 60 && checked < 1000; ++t) {
      if (is_decision_epoch(state)) {
        CrewTargets crews;
        std::vector<LineId> open;
        for (const auto line : state.active_faults()) {
          const bool claimed = std::any_of(state.crews.begin(), state.crews.end(),
                                           [&](const CrewState& c) { return c.target == line; });
          if (!claimed) open.push_back(line);
        }
        std::shuffle(open.begin(), open.end(), rng);
        for (const auto& c : state.crews) {
          if (c.is_free() && !open.empty() && rng() % 4 != 0) {
            crews.emplace_back(c.id, open.back());
            open.pop_back();
          }
        }
        MegTargets megs;
        for (const auto& m : state.megs) {
          if (m.is_free() && rng() % 2 == 0)
            megs.emplace_back(m.id, net.access_points()[rng() % net.access_points().size()]);
        }
        apply_targets(state, net, crews, megs);
        state.decision_due = false;
      }
      const auto dispatch = period_cost(net, state, settings);
      const auto before = state;
      transition_in_place(net, state, dispatch, settings.delta_t);
      ++checked;

      ASSERT_EQ(state.period, before.period + 1);
      ASSERT_EQ(state.faults.size(), before.faults.size());
      for (std::size_t i = 0; i < state.faults.size(); ++i) {
        const auto& f0 = before.faults[i];
        const auto& f1 = state.faults[i];
        const bool worked = std::any_of(before.crews.begin(), before.crews.end(),
                                        [&](const CrewState& c) { return c.repairing && c.line() == f0.line; });
        // Progress is monotone and moves only under a repairing crew.
        ASSERT_EQ(f1.repair_progress, f0.repair_progress + (worked ? 1 : 0));
        // A fault leaves the active set exactly when progress reaches its repair time.
        const double needed = f0.true_repair_time ? *f0.true_repair_time : f0.estimated_repair_time;
        ASSERT_EQ(f1.repaired, f0.repaired || f1.repair_progress >= needed);
        ASSERT_EQ(state.line_status.closed(f1.line), f1.repaired);
      }
      for (std::size_t i = 0; i < state.crews.size(); ++i) {
        const auto& c0 = before.crews[i];
        const auto& c1 = state.crews[i];
        if (c0.repairing) continue;
        if (!c0.target) {
          ASSERT_EQ(c1, c0);
          continue;
        }
        // Travel counts down by one period and the crew appears at its target at zero.
        ASSERT_EQ(c1.remaining_travel, std::max(0, c0.remaining_travel - 1));
        if (c1.remaining_travel > 0) {
          ASSERT_TRUE(c1.in_transit());
          ASSERT_EQ(c1.target, c0.target);
        } else {
          ASSERT_EQ(c1.line(), c0.target);
        }
      }
      for (std::size_t i = 0; i < state.megs.size(); ++i) {
        const auto& m0 = before.megs[i];
        const auto& m1 = state.megs[i];
        ASSERT_EQ(m1.remaining_travel, std::max(0, m0.remaining_travel - 1));
        if (m1.remaining_travel > 0) {
          ASSERT_TRUE(m1.in_transit());
          ASSERT_FALSE(m1.supplying);
        } else if (m0.target) {
          ASSERT_EQ(m1.bus(), m0.target);
          ASSERT_TRUE(m1.supplying);
        }
      }
      for (std::size_t i = 0; i < state.storages.size(); ++i) {
        const auto& u = net.storages()[i];
        ASSERT_GE(state.storages[i].energy, u.energy_min);
        ASSERT_LE(state.storages[i].energy, u.energy_max);
      }
      if (!state.has_active_faults() && !truth.has_pending_faults(state)) break;
      observe_in_place(state, truth.observe(state));
    }
  }
  EXPECT_EQ(checked, 1000);
}

}  // namespace
}  // namespace gridrestore
