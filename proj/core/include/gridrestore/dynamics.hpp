#pragma once

#include <span>
#include <utility>
#include <vector>

#include "gridrestore/dispatch.hpp"
#include "gridrestore/instance.hpp"
#include "gridrestore/state.hpp"

namespace gridrestore {

using CrewTargets = std::vector<std::pair<CrewId, LineId>>;
using MegTargets = std::vector<std::pair<MegId, BusId>>;

struct RestorationAction {
  CrewTargets crew_targets;
  MegTargets meg_targets;
  DispatchResult dispatch;
};

/// Period-0 state: faults discovered at period 0 are active, crews and MEGs
/// idle at their depots, storages at their initial energy, faulted and
/// normally-open lines open. Unknown repair times start at `prior_mean`.
[[nodiscard]] SystemState initial_state(const Network& network, std::span<const FaultSpec> faults,
                                        std::span<const CrewSpec> crews, std::span<const MegSpec> megs,
                                        double prior_mean);
[[nodiscard]] SystemState initial_state(const Instance& instance);

/// Fault record for a newly discovered fault as the engine sees it.
[[nodiscard]] FaultRecord discovered_fault(const FaultSpec& spec, double prior_mean);

/// Appends new faults, overwrites estimates with revealed repair times and
/// stages the period inputs. Throws DynamicsError if a repair time is revealed
/// for a line no crew is standing at, or the observation is for another period.
[[nodiscard]] SystemState observe(const SystemState& state, const Observation& obs);
void observe_in_place(SystemState& state, const Observation& obs);

/// Hands new targets to free crews and MEGs: the unit leaves immediately with
/// its travel countdown set. Throws DynamicsError for busy units, duplicate
/// crew targets, targets outside the active fault set, or non access-point buses.
void apply_targets(SystemState& state, const Network& network, const CrewTargets& crews, const MegTargets& megs);

/// Advances one period: repair progress, fault-set update, travel countdown,
/// arrival, repair and supply flags, storage energy, line status, period.
/// Throws DynamicsError when the dispatch would push storage outside its bounds.
[[nodiscard]] SystemState transition(const Network& network, const SystemState& state,
                                     const RestorationAction& action, double delta_t);
void transition_in_place(const Network& network, SystemState& state, const DispatchResult& dispatch,
                         double delta_t);

[[nodiscard]] Point location_point(const Network& network, const CrewLocation& where);
[[nodiscard]] Point location_point(const Network& network, const MegLocation& where);

/// Whole periods to travel between two locations at the network's travel speed:
/// ceil(manhattan / speed), at least 1 when the locations differ, 0 when identical.
[[nodiscard]] int crew_travel_time(const Network& network, const CrewLocation& from, LineId to);
[[nodiscard]] int meg_travel_time(const Network& network, const MegLocation& from, BusId to);

}  // namespace gridrestore
