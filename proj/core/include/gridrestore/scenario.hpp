#pragma once

#include <cstdint>
#include <vector>

#include "gridrestore/instance.hpp"
#include "gridrestore/state.hpp"

namespace gridrestore {

/// A fault that a scenario discovers after the scenario's start.
struct ScenarioFault {
  LineId line;
  int discovery_period{0};
  int repair_time{1};
  double estimated_repair_time{0.0};
  bool known{false};

  friend bool operator==(const ScenarioFault&, const ScenarioFault&) = default;
};

/// One realization of the uncertain future: repair times, later fault
/// discoveries and per-period demand / source capacity.
struct Scenario {
  std::uint64_t stream_id{0};
  int first_period{0};                                // first period covered by the trajectories
  std::vector<int> repair_times;                      // per line, 0 when not drawn
  std::vector<ScenarioFault> new_faults;              // ordered by discovery period, then line
  std::vector<std::vector<double>> load_trajectory;   // [period - first_period][bus]
  std::vector<std::vector<double>> source_trajectory; // [period - first_period][source]

  /// Information revealed at the start of `state.period`: faults discovered
  /// then, repair times of faults a crew is standing at, period inputs.
  [[nodiscard]] Observation observe(const SystemState& state) const;

  /// True if some fault of this scenario is still to be discovered after `period`.
  [[nodiscard]] bool has_pending_faults(const SystemState& state) const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Purpose tags separating the random streams derived from one master seed.
enum class StreamPurpose : std::uint32_t { rollout = 1, ground_truth = 2 };

/// Samples `n` scenarios from `priors` conditioned on `state`, covering periods
/// state.period + 1 up to `horizon`. Revealed repair times are never
/// resampled. Scenario i depends only on (seed, state.period, i).
[[nodiscard]] std::vector<Scenario> generate_scenarios(const Instance& instance, const UncertaintyPriors& priors,
                                                       const SystemState& state, std::size_t n, std::uint64_t seed,
                                                       int horizon);

/// The hidden realization an online run is evaluated against: the instance's
/// scripted faults, fixed or uniformly drawn repair times, noisy inputs.
[[nodiscard]] Scenario ground_truth_scenario(const Instance& instance, std::uint64_t seed);

/// Fault-free inputs from the instance forecast over [first, horizon).
[[nodiscard]] Scenario forecast_scenario(const Instance& instance, int first, int horizon);

}  // namespace gridrestore
