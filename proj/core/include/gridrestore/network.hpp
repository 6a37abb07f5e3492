#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gridrestore/ids.hpp"

namespace gridrestore {

struct Point {
  double x{0.0};
  double y{0.0};
};

[[nodiscard]] inline double manhattan(Point a, Point b) {
  const double dx = a.x > b.x ? a.x - b.x : b.x - a.x;
  const double dy = a.y > b.y ? a.y - b.y : b.y - a.y;
  return dx + dy;
}

struct Bus {
  std::string id;
  Point coords;
  double demand_active{0.0};    // kW, nominal; scaled by the load profile
  double demand_reactive{0.0};  // kvar, unused by the fast estimator
  std::string profile;          // load profile name, empty = flat
  double shed_cost{1.0};        // $/kWh
  bool is_substation{false};
  bool is_access_point{false};
};

struct Line {
  std::string id;
  BusId from;
  BusId to;
  double capacity_active{0.0};    // kW
  double capacity_reactive{0.0};  // kvar, unused by the fast estimator
  bool is_switchable{false};
  bool normally_open{false};
  double resistance{0.0};
  double reactance{0.0};
};

enum class SourceKind { substation, distributed, renewable };

struct SourceUnit {
  std::string id;
  BusId bus;
  SourceKind kind{SourceKind::distributed};
  double max_active{0.0};  // kW; for renewables the nameplate scaled by the PV profile
  double max_reactive{0.0};
  std::string profile;  // PV profile name for renewables
};

struct StorageUnit {
  std::string id;
  BusId bus;
  double energy_min{0.0};  // kWh
  double energy_max{0.0};  // kWh
  double power_max{0.0};   // kW
  double efficiency{1.0};
  double initial_energy{0.0};
};

struct Depot {
  std::string id;
  Point coords;
};

struct Incidence {
  LineId line;
  BusId other;
};

/// Per-period exogenous quantities: active demand per bus and available
/// active capacity per source (the PV cap for renewables, the static rating
/// for everything else).
struct PeriodInputs {
  std::vector<double> load_demands;  // kW per bus
  std::vector<double> source_caps;   // kW per source

  friend bool operator==(const PeriodInputs&, const PeriodInputs&) = default;
};

/// Static grid description. Immutable after construction; the constructor
/// validates cross references, component invariants and full-graph
/// connectivity and throws ValidationError on the first violation.
class Network {
 public:
  Network(std::vector<Bus> buses, std::vector<Line> lines, std::vector<SourceUnit> sources,
          std::vector<StorageUnit> storages, std::vector<Depot> depots, double travel_speed);

  [[nodiscard]] std::span<const Bus> buses() const { return buses_; }
  [[nodiscard]] std::span<const Line> lines() const { return lines_; }
  [[nodiscard]] std::span<const SourceUnit> sources() const { return sources_; }
  [[nodiscard]] std::span<const StorageUnit> storages() const { return storages_; }
  [[nodiscard]] std::span<const Depot> depots() const { return depots_; }
  [[nodiscard]] double travel_speed() const { return travel_speed_; }

  [[nodiscard]] std::size_t bus_count() const { return buses_.size(); }
  [[nodiscard]] std::size_t line_count() const { return lines_.size(); }

  [[nodiscard]] const Bus& bus(BusId id) const { return buses_[id.index()]; }
  [[nodiscard]] const Line& line(LineId id) const { return lines_[id.index()]; }
  [[nodiscard]] const SourceUnit& source(SourceId id) const { return sources_[id.index()]; }
  [[nodiscard]] const StorageUnit& storage(StorageId id) const { return storages_[id.index()]; }
  [[nodiscard]] const Depot& depot(DepotId id) const { return depots_[id.index()]; }

  [[nodiscard]] std::span<const Incidence> incident(BusId id) const { return adjacency_[id.index()]; }

  /// Buses sorted by decreasing shed cost, ties by lowest id.
  [[nodiscard]] std::span<const BusId> priority_order() const { return priority_; }
  [[nodiscard]] std::span<const BusId> access_points() const { return access_points_; }
  [[nodiscard]] std::span<const BusId> substations() const { return substations_; }

  [[nodiscard]] Point line_midpoint(LineId id) const;

  [[nodiscard]] std::optional<BusId> find_bus(std::string_view id) const;
  [[nodiscard]] std::optional<LineId> find_line(std::string_view id) const;
  [[nodiscard]] std::optional<DepotId> find_depot(std::string_view id) const;

  /// Forecast-free inputs: nominal demand and nameplate capacities.
  [[nodiscard]] PeriodInputs nominal_inputs() const;

 private:
  std::vector<Bus> buses_;
  std::vector<Line> lines_;
  std::vector<SourceUnit> sources_;
  std::vector<StorageUnit> storages_;
  std::vector<Depot> depots_;
  double travel_speed_{1.0};

  std::vector<std::vector<Incidence>> adjacency_;
  std::vector<BusId> priority_;
  std::vector<BusId> access_points_;
  std::vector<BusId> substations_;
  std::unordered_map<std::string, BusId> bus_index_;
  std::unordered_map<std::string, LineId> line_index_;
  std::unordered_map<std::string, DepotId> depot_index_;
};

}  // namespace gridrestore
