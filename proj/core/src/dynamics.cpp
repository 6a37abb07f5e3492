#include "gridrestore/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "gridrestore/errors.hpp"

namespace gridrestore {

namespace {

int periods_for(const Network& network, Point a, Point b) {
  const double d = manhattan(a, b) / network.travel_speed();
  return std::max(1, static_cast<int>(std::ceil(d - 1e-9)));
}

}  // namespace

std::vector<LineId> SystemState::active_faults() const {
  std::vector<LineId> out;
  for (const auto& f : faults) {
    if (!f.repaired) out.push_back(f.line);
  }
  return out;
}

bool SystemState::has_active_faults() const {
  return std::any_of(faults.begin(), faults.end(), [](const FaultRecord& f) { return !f.repaired; });
}

const FaultRecord* SystemState::find_fault(LineId line) const {
  for (const auto& f : faults) {
    if (f.line == line) return &f;
  }
  return nullptr;
}

FaultRecord* SystemState::find_fault(LineId line) {
  for (auto& f : faults) {
    if (f.line == line) return &f;
  }
  return nullptr;
}

bool SystemState::is_faulted(LineId line) const {
  const auto* f = find_fault(line);
  return f != nullptr && !f->repaired;
}

FaultRecord discovered_fault(const FaultSpec& spec, double prior_mean) {
  FaultRecord f;
  f.line = spec.line;
  f.discovery_period = spec.discovery_period;
  if (spec.known) {
    f.true_repair_time = spec.repair_time;
    f.estimated_repair_time = static_cast<double>(*spec.repair_time);
    f.revealed = true;
  } else {
    f.estimated_repair_time = spec.estimated_repair_time.value_or(prior_mean);
  }
  return f;
}

SystemState initial_state(const Network& network, std::span<const FaultSpec> faults, std::span<const CrewSpec> crews,
                          std::span<const MegSpec> megs, double prior_mean) {
  SystemState s;
  s.line_status = LineStatusMap(network.line_count(), true);
  for (std::size_t i = 0; i < network.line_count(); ++i) {
    if (network.lines()[i].normally_open) s.line_status.open(LineId{i});
  }
  for (const auto& spec : faults) {
    if (spec.line.index() >= network.line_count()) throw ValidationError("fault references an unknown line");
    if (spec.discovery_period != 0) continue;
    s.faults.push_back(discovered_fault(spec, prior_mean));
    s.line_status.open(spec.line);
  }
  for (std::size_t i = 0; i < crews.size(); ++i) {
    if (crews[i].depot.index() >= network.depots().size())
      throw ValidationError("crew '" + crews[i].id + "' references an unknown depot");
    s.crews.push_back({CrewId{i}, crews[i].depot, false, 0, std::nullopt});
  }
  for (std::size_t i = 0; i < megs.size(); ++i) {
    if (megs[i].depot.index() >= network.depots().size())
      throw ValidationError("MEG '" + megs[i].id + "' references an unknown depot");
    s.megs.push_back({MegId{i}, megs[i].depot, false, 0, std::nullopt, megs[i].max_active, megs[i].max_reactive});
  }
  for (std::size_t i = 0; i < network.storages().size(); ++i)
    s.storages.push_back({StorageId{i}, network.storages()[i].initial_energy});
  s.inputs = network.nominal_inputs();
  s.decision_due = true;
  return s;
}

SystemState initial_state(const Instance& instance) {
  auto s = initial_state(instance.network, instance.faults, instance.crews, instance.megs,
                         instance.priors.repair_time_mean());
  s.inputs = instance.forecast(0);
  return s;
}

void observe_in_place(SystemState& state, const Observation& obs) {
  if (obs.period != state.period)
    throw DynamicsError("observation for period " + std::to_string(obs.period) + " applied at period " +
                        std::to_string(state.period));
  for (const auto& f : obs.new_faults) {
    if (state.find_fault(f.line)) throw DynamicsError("fault discovered twice on the same line");
    state.faults.push_back(f);
    state.line_status.open(f.line);
    state.decision_due = true;
  }
  for (const auto& [line, time] : obs.revealed_repair_times) {
    auto* f = state.find_fault(line);
    if (!f) throw DynamicsError("repair time revealed for a line that is not faulted");
    const bool crew_present = std::any_of(state.crews.begin(), state.crews.end(), [&](const CrewState& c) {
      return c.remaining_travel == 0 && c.line() == line;
    });
    if (!crew_present) throw DynamicsError("repair time revealed for a line without a crew on site");
    if (time < 1) throw DynamicsError("revealed repair time must be at least one period");
    f->true_repair_time = time;
    f->estimated_repair_time = static_cast<double>(time);
    f->revealed = true;
  }
  if (obs.inputs) {
    for (const double d : obs.inputs->load_demands)
      if (d < 0.0) throw DynamicsError("negative load demand in observation");
    for (const double c : obs.inputs->source_caps)
      if (c < 0.0) throw DynamicsError("negative source capacity in observation");
    state.inputs = *obs.inputs;
  }
}

SystemState observe(const SystemState& state, const Observation& obs) {
  SystemState next = state;
  observe_in_place(next, obs);
  return next;
}

void apply_targets(SystemState& state, const Network& network, const CrewTargets& crews, const MegTargets& megs) {
  for (std::size_t i = 0; i < crews.size(); ++i) {
    const auto [crew_id, line] = crews[i];
    for (std::size_t j = 0; j < i; ++j) {
      if (crews[j].second == line) throw DynamicsError("two crews assigned to the same line");
      if (crews[j].first == crew_id) throw DynamicsError("crew assigned twice");
    }
    if (crew_id.index() >= state.crews.size()) throw DynamicsError("unknown crew in action");
    if (!state.is_faulted(line)) throw DynamicsError("crew assigned to a line that is not faulted");
    auto& crew = state.crews[crew_id.index()];
    if (!crew.is_free()) throw DynamicsError("crew assigned while busy");
    for (const auto& other : state.crews) {
      if (other.id != crew_id && other.target == line) throw DynamicsError("line already claimed by another crew");
    }
    crew.target = line;
    crew.remaining_travel = crew.line() == line ? 0 : crew_travel_time(network, crew.location, line);
  }
  for (const auto& [meg_id, bus] : megs) {
    if (meg_id.index() >= state.megs.size()) throw DynamicsError("unknown MEG in action");
    if (!network.bus(bus).is_access_point) throw DynamicsError("MEG target is not an access point");
    auto& meg = state.megs[meg_id.index()];
    if (!meg.is_free()) throw DynamicsError("MEG reassigned while travelling");
    if (meg.bus() == bus) {
      meg.target = bus;
      continue;
    }
    const int travel = meg_travel_time(network, meg.location, bus);
    meg.target = bus;
    meg.remaining_travel = travel;
    meg.supplying = false;
  }
}

void transition_in_place(const Network& network, SystemState& state, const DispatchResult& dispatch, double delta_t) {
  // Repair progress for lines with a crew at work.
  for (const auto& c : state.crews) {
    if (!c.repairing) continue;
    auto* f = state.find_fault(*c.line());
    if (!f || f->repaired) throw DynamicsError("crew repairing a line that is not faulted");
    f->repair_progress += 1;
  }
  // Fault-set update: a line leaves the active set once progress reaches its repair time.
  for (auto& f : state.faults) {
    if (f.repaired) continue;
    const double needed = f.true_repair_time ? static_cast<double>(*f.true_repair_time) : f.estimated_repair_time;
    if (static_cast<double>(f.repair_progress) >= needed) {
      f.repaired = true;
      state.decision_due = true;
    }
  }
  // Crews.
  for (auto& c : state.crews) {
    if (c.repairing) {
      const auto* f = state.find_fault(*c.line());
      c.repairing = static_cast<double>(f->repair_progress) < f->estimated_repair_time && !f->repaired;
      if (!c.repairing) {
        c.target.reset();
        state.decision_due = true;
      }
      continue;
    }
    if (!c.target) continue;
    if (c.remaining_travel > 0) c.remaining_travel -= 1;
    if (c.remaining_travel > 0) {
      c.location = std::monostate{};
      continue;
    }
    c.location = *c.target;
    const auto* f = state.find_fault(*c.target);
    c.repairing = f && !f->repaired && static_cast<double>(f->repair_progress) < f->estimated_repair_time;
    if (!c.repairing) {
      c.target.reset();
      state.decision_due = true;
    }
  }
  // MEGs.
  for (auto& m : state.megs) {
    if (!m.target || m.remaining_travel == 0) {
      if (m.target && m.bus() != m.target) {
        m.location = *m.target;
        m.supplying = true;
        state.decision_due = true;
      }
      continue;
    }
    m.remaining_travel -= 1;
    if (m.remaining_travel > 0) {
      m.location = std::monostate{};
      m.supplying = false;
    } else {
      m.location = *m.target;
      m.supplying = true;
      state.decision_due = true;
    }
  }
  // Storage energy.
  const auto units = network.storages();
  for (std::size_t i = 0; i < state.storages.size(); ++i) {
    const auto& u = units[i];
    const double dis = dispatch.storage_discharge.empty() ? 0.0 : dispatch.storage_discharge[i];
    const double ch = dispatch.storage_charge.empty() ? 0.0 : dispatch.storage_charge[i];
    double e = state.storages[i].energy - dis / u.efficiency * delta_t + u.efficiency * ch * delta_t;
    if (e < u.energy_min) {
      if (e < u.energy_min - 1e-9) throw DynamicsError("storage '" + u.id + "' discharged below its minimum energy");
      e = u.energy_min;
    }
    if (e > u.energy_max) {
      if (e > u.energy_max + 1e-9) throw DynamicsError("storage '" + u.id + "' charged above its maximum energy");
      e = u.energy_max;
    }
    state.storages[i].energy = e;
  }
  // Line status: keep the dispatched switch positions, close repaired lines.
  if (dispatch.line_status.size() == state.line_status.size()) state.line_status = dispatch.line_status;
  for (const auto& f : state.faults) {
    if (f.repaired) state.line_status.close(f.line);
    else state.line_status.open(f.line);
  }
  state.period += 1;
}

SystemState transition(const Network& network, const SystemState& state, const RestorationAction& action,
                       double delta_t) {
  SystemState next = state;
  apply_targets(next, network, action.crew_targets, action.meg_targets);
  transition_in_place(network, next, action.dispatch, delta_t);
  return next;
}

Point location_point(const Network& network, const CrewLocation& where) {
  if (const auto* d = std::get_if<DepotId>(&where)) return network.depot(*d).coords;
  if (const auto* l = std::get_if<LineId>(&where)) return network.line_midpoint(*l);
  throw DynamicsError("travel time requested from an in-transit location");
}

Point location_point(const Network& network, const MegLocation& where) {
  if (const auto* d = std::get_if<DepotId>(&where)) return network.depot(*d).coords;
  if (const auto* b = std::get_if<BusId>(&where)) return network.bus(*b).coords;
  throw DynamicsError("travel time requested from an in-transit location");
}

int crew_travel_time(const Network& network, const CrewLocation& from, LineId to) {
  if (to.index() >= network.line_count()) throw DynamicsError("unknown line in travel time");
  if (const auto* l = std::get_if<LineId>(&from); l && *l == to) return 0;
  return periods_for(network, location_point(network, from), network.line_midpoint(to));
}

int meg_travel_time(const Network& network, const MegLocation& from, BusId to) {
  if (to.index() >= network.bus_count()) throw DynamicsError("unknown bus in travel time");
  if (const auto* b = std::get_if<BusId>(&from); b && *b == to) return 0;
  return periods_for(network, location_point(network, from), network.bus(to).coords);
}

}  // namespace gridrestore
