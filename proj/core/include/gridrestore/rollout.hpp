#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gridrestore/instance.hpp"
#include "gridrestore/loadloss.hpp"
#include "gridrestore/policy.hpp"
#include "gridrestore/scenario.hpp"

namespace gridrestore {

/// Cost of one simulated trajectory: the period the first action is taken in
/// and everything after it.
struct RolloutCost {
  double current{0.0};
  double tail{0.0};
};

/// Sample-average value of taking a first action and following the base policy.
struct QEstimate {
  std::size_t action_index{0};
  double value{0.0};          // current + mean(tail)
  double current_cost{0.0};
  std::vector<double> per_scenario_costs;  // tail cost per scenario
};

/// True when targets must be recomputed: a unit became free or a fault was
/// discovered, or a free crew has an active fault nobody has claimed.
[[nodiscard]] bool is_decision_epoch(const SystemState& state);

/// Applies the first action at `state.period` (the state has already observed
/// that period), then the base policy at every later decision epoch, with
/// observations drawn from `scenario`. Stops before period `horizon`, or once
/// no fault is active and none is still to be discovered.
[[nodiscard]] RolloutCost simulate_to_horizon(const Network& network, const SystemState& state,
                                              const CrewAssignment& crews, const MegAssignment& megs,
                                              const Scenario& scenario, int horizon, const LossSettings& settings);

[[nodiscard]] QEstimate q_value(const Network& network, const SystemState& state, const CrewAssignment& crews,
                                const MegAssignment& megs, const std::vector<Scenario>& scenarios, int horizon,
                                const LossSettings& settings, std::size_t threads = 1);

struct OdpConfig {
  std::size_t candidates{40};  // K_a
  std::size_t scenarios{50};   // N_S
  std::size_t threads{0};      // 0 = worker_threads()
};

struct OdpDecision {
  CrewAssignment crews;
  MegAssignment megs;
  std::vector<QEstimate> crew_values;  // empty when there was a single crew candidate
  std::vector<QEstimate> meg_values;
};

/// One rollout decision: sample scenarios, rank the reduced crew set by
/// sampled value with the base MEG action, then rank the reduced MEG set with
/// the chosen crew action fixed. Ties keep the earlier (higher index) candidate.
[[nodiscard]] OdpDecision odp_decide(const Instance& instance, const SystemState& state,
                                     const UncertaintyPriors& priors, const OdpConfig& config, std::uint64_t seed,
                                     int horizon, const LossSettings& settings);

enum class PolicyKind { base, odp };

[[nodiscard]] std::string_view to_string(PolicyKind kind);
[[nodiscard]] PolicyKind parse_policy_kind(std::string_view text);

struct RunOptions {
  PolicyKind policy{PolicyKind::base};
  OdpConfig odp;
  std::optional<int> horizon;  // defaults to the instance horizon
  std::uint64_t seed{1};
};

struct PeriodRecord {
  int period{0};
  std::vector<double> demand;  // kW per bus
  std::vector<double> served;  // kW per bus
  std::vector<std::uint32_t> island_of;
  double cost{0.0};
};

struct ActionEvent {
  int period{0};
  std::string unit_id;
  std::string unit_kind;  // crew | meg
  std::string event;      // assign | arrive | repaired | relocate | park
  std::string target;
};

struct RunRecord {
  std::vector<PeriodRecord> periods;
  std::vector<ActionEvent> actions;
  std::vector<double> decision_seconds;  // wall clock per decision epoch
  double total_cost{0.0};
};

/// Online restoration against the seed's ground truth: observe, decide at
/// decision epochs, dispatch every period, stop once every fault (including
/// later discoveries) is repaired or the horizon is reached.
[[nodiscard]] RunRecord run_online(const Instance& instance, const RunOptions& options);

}  // namespace gridrestore
