#include "gridrestore/network.hpp"

#include <algorithm>
#include <deque>

#include "gridrestore/errors.hpp"

namespace gridrestore {

namespace {

template <class Table>
void check_unique_ids(const Table& items, std::string_view what) {
  std::unordered_map<std::string, int> seen;
  for (const auto& item : items) {
    if (item.id.empty()) throw ValidationError(std::string(what) + " with empty id");
    if (!seen.emplace(item.id, 0).second) throw ValidationError("duplicate " + std::string(what) + " id '" + item.id + "'");
  }
}

}  // namespace

Network::Network(std::vector<Bus> buses, std::vector<Line> lines, std::vector<SourceUnit> sources,
                 std::vector<StorageUnit> storages, std::vector<Depot> depots, double travel_speed)
    : buses_(std::move(buses)),
      lines_(std::move(lines)),
      sources_(std::move(sources)),
      storages_(std::move(storages)),
      depots_(std::move(depots)),
      travel_speed_(travel_speed) {
  if (buses_.empty()) throw ValidationError("network has no buses");
  if (!(travel_speed_ > 0.0)) throw ValidationError("travel_speed must be positive");
  check_unique_ids(buses_, "bus");
  check_unique_ids(lines_, "line");
  check_unique_ids(sources_, "source");
  check_unique_ids(storages_, "storage");
  check_unique_ids(depots_, "depot");

  for (const auto& b : buses_) {
    if (!(b.shed_cost > 0.0)) throw ValidationError("bus '" + b.id + "': shed_cost must be positive");
    if (b.demand_active < 0.0) throw ValidationError("bus '" + b.id + "': negative demand");
  }
  const auto bus_ok = [&](BusId id) { return id.index() < buses_.size(); };
  for (const auto& l : lines_) {
    if (!bus_ok(l.from) || !bus_ok(l.to)) throw ValidationError("line '" + l.id + "' references an unknown bus");
    if (l.from == l.to) throw ValidationError("line '" + l.id + "' is a self loop");
    if (!(l.capacity_active > 0.0)) throw ValidationError("line '" + l.id + "': capacity must be positive");
  }
  for (const auto& s : sources_) {
    if (!bus_ok(s.bus)) throw ValidationError("source '" + s.id + "' references an unknown bus");
    if (s.max_active < 0.0) throw ValidationError("source '" + s.id + "': negative capacity");
  }
  for (const auto& s : storages_) {
    if (!bus_ok(s.bus)) throw ValidationError("storage '" + s.id + "' references an unknown bus");
    if (s.energy_min < 0.0 || s.energy_min > s.energy_max)
      throw ValidationError("storage '" + s.id + "': need 0 <= energy_min <= energy_max");
    if (s.power_max < 0.0) throw ValidationError("storage '" + s.id + "': negative power rating");
    if (!(s.efficiency > 0.0 && s.efficiency <= 1.0))
      throw ValidationError("storage '" + s.id + "': efficiency must lie in (0, 1]");
    if (s.initial_energy < s.energy_min || s.initial_energy > s.energy_max)
      throw ValidationError("storage '" + s.id + "': initial energy outside bounds");
  }

  adjacency_.resize(buses_.size());
  for (std::size_t i = 0; i < lines_.size(); ++i) {
    const LineId id{i};
    adjacency_[lines_[i].from.index()].push_back({id, lines_[i].to});
    adjacency_[lines_[i].to.index()].push_back({id, lines_[i].from});
  }

  // Full graph (every line closed) must be a single component.
  std::vector<char> seen(buses_.size(), 0);
  std::deque<std::size_t> queue{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    for (const auto& inc : adjacency_[u]) {
      if (!seen[inc.other.index()]) {
        seen[inc.other.index()] = 1;
        ++reached;
        queue.push_back(inc.other.index());
      }
    }
  }
  if (reached != buses_.size()) throw ValidationError("network is disconnected with all lines closed");

  for (std::size_t i = 0; i < buses_.size(); ++i) {
    priority_.emplace_back(i);
    bus_index_.emplace(buses_[i].id, BusId{i});
    if (buses_[i].is_access_point) access_points_.emplace_back(i);
    if (buses_[i].is_substation) substations_.emplace_back(i);
  }
  std::stable_sort(priority_.begin(), priority_.end(), [&](BusId a, BusId b) {
    return buses_[a.index()].shed_cost > buses_[b.index()].shed_cost;
  });
  for (std::size_t i = 0; i < lines_.size(); ++i) line_index_.emplace(lines_[i].id, LineId{i});
  for (std::size_t i = 0; i < depots_.size(); ++i) depot_index_.emplace(depots_[i].id, DepotId{i});
}

Point Network::line_midpoint(LineId id) const {
  const auto& l = line(id);
  const auto a = bus(l.from).coords;
  const auto b = bus(l.to).coords;
  return {(a.x + b.x) / 2.0, (a.y + b.y) / 2.0};
}

std::optional<BusId> Network::find_bus(std::string_view id) const {
  if (auto it = bus_index_.find(std::string(id)); it != bus_index_.end()) return it->second;
  return std::nullopt;
}

std::optional<LineId> Network::find_line(std::string_view id) const {
  if (auto it = line_index_.find(std::string(id)); it != line_index_.end()) return it->second;
  return std::nullopt;
}

std::optional<DepotId> Network::find_depot(std::string_view id) const {
  if (auto it = depot_index_.find(std::string(id)); it != depot_index_.end()) return it->second;
  return std::nullopt;
}

PeriodInputs Network::nominal_inputs() const {
  PeriodInputs in;
  in.load_demands.reserve(buses_.size());
  for (const auto& b : buses_) in.load_demands.push_back(b.demand_active);
  in.source_caps.reserve(sources_.size());
  for (const auto& s : sources_) in.source_caps.push_back(s.max_active);
  return in;
}

}  // namespace gridrestore
