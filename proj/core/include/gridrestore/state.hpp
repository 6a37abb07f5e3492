#pragma once

#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "gridrestore/graph.hpp"
#include "gridrestore/network.hpp"

namespace gridrestore {

struct FaultRecord {
  LineId line;
  std::optional<int> true_repair_time;  // set once a crew reaches the line
  double estimated_repair_time{0.0};    // periods; equals the true time once revealed
  bool revealed{false};
  int discovery_period{0};
  int repair_progress{0};
  bool repaired{false};

  friend bool operator==(const FaultRecord&, const FaultRecord&) = default;
};

/// Where a crew is: in transit (monostate), at a depot, or at a line.
using CrewLocation = std::variant<std::monostate, DepotId, LineId>;
/// Where a MEG is: in transit (monostate), at a depot, or parked at a bus.
using MegLocation = std::variant<std::monostate, DepotId, BusId>;

struct CrewState {
  CrewId id;
  CrewLocation location;
  bool repairing{false};
  int remaining_travel{0};
  std::optional<LineId> target;

  [[nodiscard]] bool in_transit() const { return std::holds_alternative<std::monostate>(location); }
  /// Available for a new assignment: not repairing and not travelling.
  [[nodiscard]] bool is_free() const { return !repairing && remaining_travel == 0 && !in_transit(); }
  [[nodiscard]] std::optional<LineId> line() const {
    if (const auto* l = std::get_if<LineId>(&location)) return *l;
    return std::nullopt;
  }

  friend bool operator==(const CrewState&, const CrewState&) = default;
};

struct MegState {
  MegId id;
  MegLocation location;
  bool supplying{false};
  int remaining_travel{0};
  std::optional<BusId> target;
  double max_active{0.0};
  double max_reactive{0.0};

  [[nodiscard]] bool in_transit() const { return std::holds_alternative<std::monostate>(location); }
  [[nodiscard]] bool is_free() const { return remaining_travel == 0 && !in_transit(); }
  [[nodiscard]] std::optional<BusId> bus() const {
    if (const auto* b = std::get_if<BusId>(&location)) return *b;
    return std::nullopt;
  }

  friend bool operator==(const MegState&, const MegState&) = default;
};

struct StorageState {
  StorageId id;
  double energy{0.0};  // kWh

  friend bool operator==(const StorageState&, const StorageState&) = default;
};

struct SystemState {
  int period{0};
  std::vector<FaultRecord> faults;  // every discovered fault, repaired ones included
  std::vector<CrewState> crews;
  std::vector<MegState> megs;
  std::vector<StorageState> storages;
  LineStatusMap line_status;
  PeriodInputs inputs;        // demand and source capacity staged for the current period
  bool decision_due{false};  // a unit became free, a repair finished, or a new fault appeared

  /// Discovered, unrepaired faulted lines (in discovery order).
  [[nodiscard]] std::vector<LineId> active_faults() const;
  [[nodiscard]] bool has_active_faults() const;
  [[nodiscard]] const FaultRecord* find_fault(LineId line) const;
  [[nodiscard]] FaultRecord* find_fault(LineId line);
  [[nodiscard]] bool is_faulted(LineId line) const;

  friend bool operator==(const SystemState&, const SystemState&) = default;
};

/// Exogenous information revealed at the start of a period.
struct Observation {
  int period{0};
  std::vector<FaultRecord> new_faults;
  std::vector<std::pair<LineId, int>> revealed_repair_times;
  std::optional<PeriodInputs> inputs;  // demand and PV caps; absent keeps the staged values
};

}  // namespace gridrestore
