#include "gridrestore/loadloss.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>

#include "gridrestore/errors.hpp"

namespace gridrestore {

namespace {

constexpr double kEps = 1e-9;
constexpr std::size_t kAllIslands = std::numeric_limits<std::size_t>::max();
constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

double plan_at(std::span<const double> plan, std::size_t i) { return plan.empty() ? 0.0 : plan[i]; }

std::uint32_t dsu_find(std::vector<std::uint32_t>& parent, std::uint32_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

struct Registry {
  std::mutex mutex;
  std::map<std::string, DispatchFunction> functions;
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

std::vector<double> allocate_island(double supply, std::span<const LoadDemand> loads) {
  std::vector<std::size_t> order(loads.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (loads[a].shed_cost != loads[b].shed_cost) return loads[a].shed_cost > loads[b].shed_cost;
    return loads[a].bus < loads[b].bus;
  });
  std::vector<double> served(loads.size(), 0.0);
  double remaining = std::max(supply, 0.0);
  for (const auto i : order) {
    const double s = std::min(std::max(loads[i].demand, 0.0), remaining);
    served[i] = s;
    remaining -= s;
  }
  return served;
}

std::vector<double> storage_base_dispatch(std::span<const IslandBalance> islands, std::span<const StorageUnit> units,
                                          std::span<const std::uint32_t> storage_island,
                                          std::span<const StorageState> states, std::span<const double> outage_periods,
                                          double delta_t) {
  std::vector<double> surplus(islands.size());
  std::vector<double> deficit(islands.size());
  for (std::size_t k = 0; k < islands.size(); ++k) {
    surplus[k] = std::max(0.0, islands[k].supply - islands[k].demand);
    deficit[k] = std::max(0.0, islands[k].demand - islands[k].supply);
  }
  std::vector<double> out(units.size(), 0.0);
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto& u = units[i];
    const auto k = storage_island[i];
    const double energy = states[i].energy;
    if (islands[k].supply >= islands[k].demand) {
      const double headroom = (u.energy_max - energy) / (u.efficiency * delta_t);
      const double charge = std::max(0.0, std::min({u.power_max, surplus[k], headroom}));
      surplus[k] -= charge;
      out[i] = -charge;
    } else {
      const double duration = std::max(1.0, outage_periods[k]);
      const double spread = (energy - u.energy_min) * u.efficiency / (duration * delta_t);
      const double discharge = std::max(0.0, std::min({u.power_max, spread, deficit[k]}));
      deficit[k] -= discharge;
      out[i] = discharge;
    }
  }
  return out;
}

LoadLossEstimator::LoadLossEstimator(const Network& network, LossSettings settings)
    : network_(&network), settings_(std::move(settings)) {
  const auto n = network.bus_count();
  network_has_loops_ = !is_radial(network, LineStatusMap(network.line_count(), true));

  // Static route from every bus to its nearest substation, preferring normally closed lines.
  substation_path_.assign(n, LineId{kNone});
  substation_next_.assign(n, BusId{kNone});
  std::vector<std::uint8_t> reached(n, 0);
  std::deque<BusId> queue;
  for (const auto s : network.substations()) {
    reached[s.index()] = 1;
    queue.push_back(s);
  }
  for (const bool allow_open : {false, true}) {
    if (allow_open) {
      for (std::size_t b = 0; b < n; ++b)
        if (reached[b]) queue.emplace_back(b);
    }
    while (!queue.empty()) {
      const auto u = queue.front();
      queue.pop_front();
      for (const auto& inc : network.incident(u)) {
        if (reached[inc.other.index()]) continue;
        if (!allow_open && network.line(inc.line).normally_open) continue;
        reached[inc.other.index()] = 1;
        substation_path_[inc.other.index()] = inc.line;
        substation_next_[inc.other.index()] = u;
        queue.push_back(inc.other);
      }
    }
  }
}

void LoadLossEstimator::open_faults(std::span<const LineId> faults) {
  if (status_.size() != network_->line_count()) status_ = LineStatusMap(network_->line_count(), true);
  for (std::size_t i = 0; i < network_->line_count(); ++i) status_.close(LineId{i});
  for (const auto f : faults) status_.open(f);
}

bool LoadLossEstimator::has_loop(const LineStatusMap& status) {
  if (!network_has_loops_) return false;
  dsu_.resize(network_->bus_count());
  std::iota(dsu_.begin(), dsu_.end(), 0u);
  const auto lines = network_->lines();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!status.closed(LineId{i})) continue;
    const auto a = dsu_find(dsu_, lines[i].from.value);
    const auto b = dsu_find(dsu_, lines[i].to.value);
    if (a == b) return true;
    dsu_[a] = b;
  }
  return false;
}

void LoadLossEstimator::partition(const LineStatusMap& status) {
  if (partition_valid_ && partitioned_ == status) return;
  partition_islands(*network_, status, islands_);
  partitioned_ = status;
  partition_valid_ = true;
  forest_ready_ = false;
  island_cache_valid_ = false;
}

void LoadLossEstimator::build_island_cache(const PeriodInputs& inputs, std::span<const double> storage_plan) {
  const auto& net = *network_;
  const auto islands = islands_.island_count();
  cached_inputs_ = inputs;
  cached_plan_.assign(storage_plan.begin(), storage_plan.end());

  island_sources_.assign(islands, 0.0);
  const auto sources = net.sources();
  for (std::size_t i = 0; i < sources.size(); ++i)
    island_sources_[islands_.island_of(sources[i].bus)] += inputs.source_caps[i];

  by_priority_offsets_.assign(islands + 1, 0);
  for (const auto b : net.priority_order()) ++by_priority_offsets_[islands_.island_of(b) + 1];
  for (std::size_t k = 0; k < islands; ++k) by_priority_offsets_[k + 1] += by_priority_offsets_[k];
  by_priority_.resize(net.bus_count());
  {
    std::vector<std::uint32_t> cursor(by_priority_offsets_.begin(), by_priority_offsets_.end() - 1);
    for (const auto b : net.priority_order()) by_priority_[cursor[islands_.island_of(b)]++] = b;
  }

  // Served power plus charging never exceeds demand plus charge requests.
  std::vector<double> bound(islands, 0.0);
  for (std::size_t b = 0; b < net.bus_count(); ++b) bound[islands_.island_of(BusId{b})] += inputs.load_demands[b];
  const auto storages = net.storages();
  for (std::size_t i = 0; i < storages.size(); ++i)
    bound[islands_.island_of(storages[i].bus)] += std::max(0.0, -plan_at(storage_plan, i));
  std::vector<double> min_cap(islands, std::numeric_limits<double>::infinity());
  const auto lines = net.lines();
  for (std::size_t l = 0; l < lines.size(); ++l) {
    if (!partitioned_.closed(LineId{l})) continue;
    auto& cap = min_cap[islands_.island_of(lines[l].from)];
    cap = std::min(cap, lines[l].capacity_active);
  }
  islands_unbound_ = true;
  for (std::size_t k = 0; k < islands; ++k) islands_unbound_ &= min_cap[k] >= bound[k];

  island_free_lv_.assign(islands, 0.0);
  if (islands_unbound_)
    for (std::size_t k = 0; k < islands; ++k) island_free_lv_[k] = island_lv(k, {}, inputs, storage_plan);
  touched_.assign(islands, 0);
  island_memo_.assign(islands, {});
  island_cache_valid_ = true;
}

double LoadLossEstimator::island_lv(std::size_t island, std::span<const MegInjection> megs, const PeriodInputs& inputs,
                                    std::span<const double> storage_plan) {
  const auto& net = *network_;
  // Same accumulation order as allocate, so both give identical values.
  double left = island_sources_[island];
  for (const auto& m : megs)
    if (islands_.island_of(m.bus) == island) left += m.max_active;
  const auto storages = net.storages();
  for (std::size_t i = 0; i < storages.size(); ++i)
    if (islands_.island_of(storages[i].bus) == island) left += std::max(0.0, plan_at(storage_plan, i));
  served_.resize(net.bus_count());
  for (auto j = by_priority_offsets_[island]; j < by_priority_offsets_[island + 1]; ++j) {
    const auto b = by_priority_[j].index();
    const double s = std::min(inputs.load_demands[b], left);
    served_[b] = s;
    left -= s;
  }
  const auto buses = net.buses();
  double lv = 0.0;
  for (const auto b : islands_.members(island)) {
    const double unserved = inputs.load_demands[b.index()] - served_[b.index()];
    if (unserved <= 0.0) continue;
    lv += settings_.lv_weighted ? buses[b.index()].shed_cost * unserved : unserved;
  }
  return lv;
}

bool LoadLossEstimator::capacity_may_bind(std::span<const MegInjection> megs, const PeriodInputs& inputs) {
  const auto& net = *network_;
  partition(status_);
  const auto islands = islands_.island_count();
  supply_.assign(islands, 0.0);
  const auto sources = net.sources();
  for (std::size_t i = 0; i < sources.size(); ++i) supply_[islands_.island_of(sources[i].bus)] += inputs.source_caps[i];
  for (const auto& m : megs) supply_[islands_.island_of(m.bus)] += m.max_active;
  remaining_ = supply_;
  for (const auto b : net.priority_order()) {
    auto& left = remaining_[islands_.island_of(b)];
    left -= std::min(inputs.load_demands[b.index()], left);
  }
  min_capacity_.assign(islands, std::numeric_limits<double>::infinity());
  const auto lines = net.lines();
  for (std::size_t l = 0; l < lines.size(); ++l) {
    if (!status_.closed(LineId{l})) continue;
    auto& cap = min_capacity_[islands_.island_of(lines[l].from)];
    cap = std::min(cap, lines[l].capacity_active);
  }
  for (std::size_t k = 0; k < islands; ++k)
    if (min_capacity_[k] < supply_[k] - remaining_[k] - kEps) return true;
  return false;
}

void LoadLossEstimator::make_radial(std::span<const MegInjection> megs, const PeriodInputs& inputs) {
  if (!has_loop(status_)) return;
  // Opening a loop line keeps every island's bus set, so without a binding
  // capacity all candidates lose the same load and the lowest id wins.
  if (!capacity_may_bind(megs, inputs)) {
    status_ = enforce_radiality(*network_, status_, [](const LineStatusMap&) { return 0.0; });
    return;
  }
  const LossEvaluator evaluate = [&](const LineStatusMap& candidate) {
    const auto forest = has_loop(candidate) ? spanning_forest(*network_, candidate) : candidate;
    return allocate(forest, megs, inputs, {}, nullptr).lv;
  };
  status_ = enforce_radiality(*network_, status_, evaluate);
}

void LoadLossEstimator::merit_fill(std::span<const MegInjection> megs, const PeriodInputs& inputs,
                                   std::span<const double> storage_plan, std::size_t only_island) {
  const auto& net = *network_;
  const auto want = [&](BusId bus) {
    const auto k = islands_.island_of(bus);
    return only_island == kAllIslands || k == only_island;
  };
  const auto take = [&](BusId bus, double cap, double& out) {
    const auto k = islands_.island_of(bus);
    const double t = std::max(0.0, std::min(cap, need_[k]));
    out = t;
    need_[k] -= t;
  };
  const auto sources = net.sources();
  for (const auto kind : {SourceKind::renewable}) {
    for (std::size_t i = 0; i < sources.size(); ++i)
      if (sources[i].kind == kind && want(sources[i].bus)) take(sources[i].bus, inputs.source_caps[i], source_out_[i]);
  }
  const auto storages = net.storages();
  for (std::size_t i = 0; i < storages.size(); ++i)
    if (want(storages[i].bus)) take(storages[i].bus, std::max(0.0, plan_at(storage_plan, i)), storage_out_[i]);
  for (std::size_t g = 0; g < megs.size(); ++g)
    if (want(megs[g].bus)) take(megs[g].bus, megs[g].max_active, meg_out_[g]);
  for (const auto kind : {SourceKind::distributed, SourceKind::substation}) {
    for (std::size_t i = 0; i < sources.size(); ++i)
      if (sources[i].kind == kind && want(sources[i].bus)) take(sources[i].bus, inputs.source_caps[i], source_out_[i]);
  }
}

bool LoadLossEstimator::island_feasible(std::size_t island, std::span<const MegInjection> megs,
                                        const PeriodInputs& inputs, std::span<const double> storage_plan) {
  const auto& net = *network_;
  double total = 0.0;
  for (const auto b : forest_.order(island)) total += served_[b.index()];
  const auto storages = net.storages();
  for (std::size_t i = 0; i < storages.size(); ++i)
    if (islands_.island_of(storages[i].bus) == island) total += charge_[i];
  need_[island] = total;
  merit_fill(megs, inputs, storage_plan, island);

  for (const auto b : forest_.order(island)) injections_[b.index()] = -served_[b.index()];
  const auto sources = net.sources();
  for (std::size_t i = 0; i < sources.size(); ++i)
    if (islands_.island_of(sources[i].bus) == island) injections_[sources[i].bus.index()] += source_out_[i];
  for (std::size_t g = 0; g < megs.size(); ++g)
    if (islands_.island_of(megs[g].bus) == island) injections_[megs[g].bus.index()] += meg_out_[g];
  for (std::size_t i = 0; i < storages.size(); ++i)
    if (islands_.island_of(storages[i].bus) == island)
      injections_[storages[i].bus.index()] += storage_out_[i] - charge_[i];

  forest_.island_flows(net, island, injections_, flows_, subtree_);
  for (const auto b : forest_.order(island)) {
    if (forest_.is_root(b)) continue;
    const auto line = forest_.parent_line(b);
    if (std::abs(flows_[line.index()]) > net.line(line).capacity_active + kEps) return false;
  }
  return true;
}

void LoadLossEstimator::allocate_with_capacity(std::size_t island, const LineStatusMap& status,
                                               std::span<const MegInjection> megs, const PeriodInputs& inputs,
                                               std::span<const double> storage_plan) {
  const auto& net = *network_;
  if (!forest_ready_) {
    forest_.build(net, status);
    forest_ready_ = true;
  }
  for (const auto b : forest_.order(island)) served_[b.index()] = 0.0;
  const auto storages = net.storages();
  for (std::size_t i = 0; i < storages.size(); ++i)
    if (islands_.island_of(storages[i].bus) == island) charge_[i] = 0.0;

  double left = supply_[island];
  for (const auto b : net.priority_order()) {
    if (islands_.island_of(b) != island) continue;
    const double inc = std::min(inputs.load_demands[b.index()], left);
    if (inc <= 0.0) continue;
    served_[b.index()] = inc;
    if (island_feasible(island, megs, inputs, storage_plan)) {
      left -= inc;
    } else {
      served_[b.index()] = 0.0;
    }
  }
  for (std::size_t i = 0; i < storages.size(); ++i) {
    if (islands_.island_of(storages[i].bus) != island) continue;
    const double inc = std::min(std::max(0.0, -plan_at(storage_plan, i)), left);
    if (inc <= 0.0) continue;
    charge_[i] = inc;
    if (island_feasible(island, megs, inputs, storage_plan)) {
      left -= inc;
    } else {
      charge_[i] = 0.0;
    }
  }
  remaining_[island] = left;
}

LoadLossEstimator::Outcome LoadLossEstimator::allocate(const LineStatusMap& status, std::span<const MegInjection> megs,
                                                       const PeriodInputs& inputs,
                                                       std::span<const double> storage_plan, DispatchResult* detail,
                                                       bool probe) {
  const auto& net = *network_;
  const auto n = net.bus_count();
  partition(status);
  const auto islands = islands_.island_count();

  supply_.assign(islands, 0.0);
  const auto sources = net.sources();
  for (std::size_t i = 0; i < sources.size(); ++i) supply_[islands_.island_of(sources[i].bus)] += inputs.source_caps[i];
  for (const auto& m : megs) supply_[islands_.island_of(m.bus)] += m.max_active;
  const auto storages = net.storages();
  for (std::size_t i = 0; i < storages.size(); ++i)
    supply_[islands_.island_of(storages[i].bus)] += std::max(0.0, plan_at(storage_plan, i));

  remaining_ = supply_;
  served_.resize(n);
  for (const auto b : net.priority_order()) {
    auto& left = remaining_[islands_.island_of(b)];
    const double s = std::min(inputs.load_demands[b.index()], left);
    served_[b.index()] = s;
    left -= s;
  }
  charge_.assign(storages.size(), 0.0);
  for (std::size_t i = 0; i < storages.size(); ++i) {
    auto& left = remaining_[islands_.island_of(storages[i].bus)];
    const double c = std::min(std::max(0.0, -plan_at(storage_plan, i)), left);
    charge_[i] = c;
    left -= c;
  }

  // Capacity only binds when some line of an island is weaker than the power the island moves.
  min_capacity_.assign(islands, std::numeric_limits<double>::infinity());
  const auto lines = net.lines();
  for (std::size_t l = 0; l < lines.size(); ++l) {
    if (!status.closed(LineId{l})) continue;
    auto& cap = min_capacity_[islands_.island_of(lines[l].from)];
    cap = std::min(cap, lines[l].capacity_active);
  }
  bool any_binding = false;
  for (std::size_t k = 0; k < islands; ++k) any_binding |= min_capacity_[k] < supply_[k] - remaining_[k] - kEps;
  if (any_binding && probe) {
    Outcome out;
    out.bound = true;
    return out;
  }
  if (any_binding) {
    need_.assign(islands, 0.0);
    source_out_.assign(sources.size(), 0.0);
    meg_out_.assign(megs.size(), 0.0);
    storage_out_.assign(storages.size(), 0.0);
    injections_.assign(n, 0.0);
    flows_.assign(lines.size(), 0.0);
    subtree_.assign(n, 0.0);
    for (std::size_t k = 0; k < islands; ++k) {
      if (min_capacity_[k] < supply_[k] - remaining_[k] - kEps)
        allocate_with_capacity(k, status, megs, inputs, storage_plan);
    }
  }

  // Summed island by island in member order, matching island_lv.
  Outcome out;
  const auto buses = net.buses();
  for (std::size_t k = 0; k < islands; ++k) {
    double cost = 0.0;
    double lv = 0.0;
    for (const auto bus : islands_.members(k)) {
      const auto b = bus.index();
      const double unserved = inputs.load_demands[b] - served_[b];
      if (unserved <= 0.0) continue;
      cost += buses[b].shed_cost * unserved;
      lv += settings_.lv_weighted ? buses[b].shed_cost * unserved : unserved;
    }
    out.cost += cost;
    out.lv += lv;
  }
  out.cost *= settings_.delta_t;
  out.lv *= settings_.delta_t;

  if (detail) {
    need_.assign(islands, 0.0);
    for (std::size_t k = 0; k < islands; ++k) need_[k] = supply_[k] - remaining_[k];
    source_out_.assign(sources.size(), 0.0);
    meg_out_.assign(megs.size(), 0.0);
    storage_out_.assign(storages.size(), 0.0);
    merit_fill(megs, inputs, storage_plan, kAllIslands);
    detail->served = served_;
    detail->demand = inputs.load_demands;
    detail->source_output = source_out_;
    detail->meg_output = meg_out_;
    detail->storage_discharge = storage_out_;
    detail->storage_charge = charge_;
    detail->line_status = status;
    detail->island_of.assign(islands_.island_ids().begin(), islands_.island_ids().end());
    detail->cost = out.cost;
  }
  return out;
}

double LoadLossEstimator::estimate_lv(std::span<const LineId> faults, std::span<const MegInjection> megs,
                                      const PeriodInputs& inputs, std::span<const double> storage_plan) {
  open_faults(faults);
  // Opening loop lines keeps every island's bus set, so without binding
  // capacity the meshed status already gives the radial answer.
  if (has_loop(status_)) {
    const auto probe = allocate(status_, megs, inputs, storage_plan, nullptr, true);
    if (!probe.bound) return probe.lv;
    make_radial(megs, inputs);
  }
  return allocate(status_, megs, inputs, storage_plan, nullptr).lv;
}

void LoadLossEstimator::group_pass(std::span<const std::uint8_t> active) {
  // Same arithmetic, in the same order, as allocate on the meshed status.
  const auto& net = *network_;
  auto& r = repairs_;
  const auto islands = r.islands.island_count();
  const auto group_of = [&](BusId b) { return r.group[r.islands.island_of(b)]; };
  r.supply.assign(islands, 0.0);
  const auto sources = net.sources();
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto g = group_of(sources[i].bus);
    if (active[g]) r.supply[g] += r.inputs.source_caps[i];
  }
  for (const auto& m : r.megs) {
    const auto g = group_of(m.bus);
    if (active[g]) r.supply[g] += m.max_active;
  }
  const auto storages = net.storages();
  for (std::size_t i = 0; i < storages.size(); ++i) {
    const auto g = group_of(storages[i].bus);
    if (active[g]) r.supply[g] += std::max(0.0, plan_at(r.plan, i));
  }
  r.left = r.supply;
  served_.resize(net.bus_count());
  for (const auto b : net.priority_order()) {
    const auto g = group_of(b);
    if (!active[g]) continue;
    const double s = std::min(r.inputs.load_demands[b.index()], r.left[g]);
    served_[b.index()] = s;
    r.left[g] -= s;
  }
  for (std::size_t i = 0; i < storages.size(); ++i) {
    const auto g = group_of(storages[i].bus);
    if (active[g]) r.left[g] -= std::min(std::max(0.0, -plan_at(r.plan, i)), r.left[g]);
  }
  r.group_lv.assign(islands, 0.0);
  const auto buses = net.buses();
  for (std::size_t b = 0; b < buses.size(); ++b) {
    const auto g = group_of(BusId{b});
    if (!active[g]) continue;
    const double unserved = r.inputs.load_demands[b] - served_[b];
    if (unserved <= 0.0) continue;
    r.group_lv[g] += settings_.lv_weighted ? buses[b].shed_cost * unserved : unserved;
  }
}

std::uint64_t LoadLossEstimator::prepare_repairs(std::span<const LineId> faults, std::span<const MegInjection> megs,
                                                 const PeriodInputs& inputs, std::span<const double> storage_plan) {
  auto& r = repairs_;
  r.faults.assign(faults.begin(), faults.end());
  r.megs.assign(megs.begin(), megs.end());
  r.inputs = inputs;
  r.plan.assign(storage_plan.begin(), storage_plan.end());
  open_faults(faults);
  partition_islands(*network_, status_, r.islands);
  const auto islands = r.islands.island_count();

  r.min_capacity.assign(islands, std::numeric_limits<double>::infinity());
  const auto lines = network_->lines();
  for (std::size_t l = 0; l < lines.size(); ++l) {
    if (!status_.closed(LineId{l})) continue;
    auto& cap = r.min_capacity[r.islands.island_of(lines[l].from)];
    cap = std::min(cap, lines[l].capacity_active);
  }
  r.group.resize(islands);
  std::iota(r.group.begin(), r.group.end(), 0u);
  r.active.assign(islands, 1);
  group_pass(r.active);
  r.lv = r.group_lv;
  r.bound.assign(islands, 0);
  for (std::size_t k = 0; k < islands; ++k) r.bound[k] = r.min_capacity[k] < r.supply[k] - r.left[k] - kEps;
  return ++repairs_token_;
}

double LoadLossEstimator::lv_repairing(std::span<const LineId> repaired) {
  auto& r = repairs_;
  const auto islands = r.islands.island_count();
  const auto lines = network_->lines();
  std::iota(r.group.begin(), r.group.end(), 0u);
  r.active.assign(islands, 0);
  for (const auto line : repaired) {
    if (std::find(r.faults.begin(), r.faults.end(), line) == r.faults.end())
      throw ValidationError("repaired line is not one of the prepared faults");
    const auto a = dsu_find(r.group, r.islands.island_of(lines[line.index()].from));
    const auto b = dsu_find(r.group, r.islands.island_of(lines[line.index()].to));
    r.group[std::max(a, b)] = std::min(a, b);
  }
  for (std::size_t k = 0; k < islands; ++k) r.group[k] = dsu_find(r.group, static_cast<std::uint32_t>(k));

  r.group_capacity.assign(islands, std::numeric_limits<double>::infinity());
  for (const auto line : repaired) {
    const auto g = r.group[r.islands.island_of(lines[line.index()].from)];
    r.active[g] = 1;
    r.group_capacity[g] = std::min(r.group_capacity[g], lines[line.index()].capacity_active);
  }
  for (std::size_t k = 0; k < islands; ++k) {
    auto& cap = r.group_capacity[r.group[k]];
    cap = std::min(cap, r.min_capacity[k]);
  }
  group_pass(r.active);

  bool bound = false;
  double lv = 0.0;
  for (std::size_t k = 0; k < islands && !bound; ++k) {
    if (r.group[k] != k) continue;
    if (r.active[k]) {
      bound = r.group_capacity[k] < r.supply[k] - r.left[k] - kEps;
      lv += r.group_lv[k];
    } else {
      bound = r.bound[k] != 0;
      lv += r.lv[k];
    }
  }
  if (!bound) return lv * settings_.delta_t;

  r.remaining.clear();
  for (const auto f : r.faults)
    if (std::find(repaired.begin(), repaired.end(), f) == repaired.end()) r.remaining.push_back(f);
  return estimate_lv(r.remaining, r.megs, r.inputs, r.plan);
}

DispatchResult LoadLossEstimator::dispatch(std::span<const LineId> faults, std::span<const MegInjection> megs,
                                           const PeriodInputs& inputs, std::span<const double> storage_plan) {
  open_faults(faults);
  make_radial(megs, inputs);
  DispatchResult result;
  allocate(status_, megs, inputs, storage_plan, &result);
  return result;
}

double LoadLossEstimator::lv_on_status(const LineStatusMap& status, std::span<const MegInjection> megs,
                                       const PeriodInputs& inputs, std::span<const double> storage_plan) {
  partition(status);
  // Bitwise comparison: cheaper than element-wise and never reuses stale values.
  const auto same = [](std::span<const double> a, std::span<const double> b) {
    return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
  };
  if (!island_cache_valid_ || !same(cached_inputs_.load_demands, inputs.load_demands) ||
      !same(cached_inputs_.source_caps, inputs.source_caps) || !same(cached_plan_, storage_plan))
    build_island_cache(inputs, storage_plan);
  if (!islands_unbound_) return allocate(status, megs, inputs, storage_plan, nullptr).lv;

  // Only islands holding a MEG differ from the MEG-free values, and those
  // depend on which MEGs are inside, not on where.
  for (const auto& m : megs) touched_[islands_.island_of(m.bus)] = 1;
  double lv = 0.0;
  for (std::size_t k = 0; k < islands_.island_count(); ++k) {
    if (!touched_[k]) {
      lv += island_free_lv_[k];
      continue;
    }
    touched_[k] = 0;
    memo_key_.clear();
    for (const auto& m : megs)
      if (islands_.island_of(m.bus) == k) memo_key_.push_back(m.max_active);
    auto& memo = island_memo_[k];
    const auto it = std::find_if(memo.begin(), memo.end(), [&](const IslandMemo& e) { return e.megs == memo_key_; });
    if (it != memo.end()) {
      lv += it->lv;
    } else {
      const double value = island_lv(k, megs, inputs, storage_plan);
      memo.push_back({memo_key_, value});
      lv += value;
    }
  }
  return lv * settings_.delta_t;
}

LineStatusMap LoadLossEstimator::radial_status(std::span<const LineId> faults, std::span<const MegInjection> megs,
                                               const PeriodInputs& inputs) {
  open_faults(faults);
  make_radial(megs, inputs);
  return status_;
}

double LoadLossEstimator::outage_periods(const SystemState& state, BusId bus) const {
  double total = 0.0;
  for (BusId b = bus; substation_path_[b.index()].value != kNone; b = substation_next_[b.index()]) {
    const auto* f = state.find_fault(substation_path_[b.index()]);
    if (f && !f->repaired) total += std::max(1.0, f->estimated_repair_time - f->repair_progress);
  }
  return std::max(1.0, total);
}

std::vector<double> LoadLossEstimator::plan_for_status(const SystemState& state, std::span<const MegInjection> megs) {
  const auto& net = *network_;
  const auto storages = net.storages();
  if (storages.empty()) return {};
  partition(status_);
  const auto islands = islands_.island_count();
  std::vector<IslandBalance> balance(islands);
  const auto sources = net.sources();
  for (std::size_t i = 0; i < sources.size(); ++i)
    balance[islands_.island_of(sources[i].bus)].supply += state.inputs.source_caps[i];
  for (const auto& m : megs) balance[islands_.island_of(m.bus)].supply += m.max_active;
  for (std::size_t b = 0; b < net.bus_count(); ++b)
    balance[islands_.island_of(BusId{b})].demand += state.inputs.load_demands[b];

  std::vector<std::uint32_t> storage_island(storages.size());
  std::vector<double> duration(islands, 1.0);
  for (std::size_t i = 0; i < storages.size(); ++i) {
    const auto k = islands_.island_of(storages[i].bus);
    storage_island[i] = k;
    if (balance[k].supply >= balance[k].demand) continue;
    for (const auto b : net.priority_order()) {
      if (islands_.island_of(b) == k && state.inputs.load_demands[b.index()] > 0.0) {
        duration[k] = outage_periods(state, b);
        break;
      }
    }
  }
  return storage_base_dispatch(balance, storages, storage_island, state.storages, duration, settings_.delta_t);
}

std::vector<double> LoadLossEstimator::storage_plan(const SystemState& state, std::span<const MegInjection> megs) {
  const auto faults = state.active_faults();
  open_faults(faults);
  make_radial(megs, state.inputs);
  return plan_for_status(state, megs);
}

DispatchResult LoadLossEstimator::dispatch_state(const SystemState& state) {
  const auto megs = supplying_megs(state);
  const auto faults = state.active_faults();
  open_faults(faults);
  make_radial(megs, state.inputs);
  const auto plan = plan_for_status(state, megs);
  DispatchResult result;
  allocate(status_, megs, state.inputs, plan, &result);
  // MEG outputs are reported per MEG of the state, zero for MEGs not supplying.
  std::vector<double> per_meg(state.megs.size(), 0.0);
  std::size_t j = 0;
  for (std::size_t g = 0; g < state.megs.size(); ++g) {
    if (state.megs[g].supplying && state.megs[g].bus()) per_meg[g] = result.meg_output[j++];
  }
  result.meg_output = std::move(per_meg);
  return result;
}

double estimate_lv(const Network& network, std::span<const LineId> faults, std::span<const MegInjection> megs,
                   const PeriodInputs& inputs, std::span<const double> storage_plan, const LossSettings& settings) {
  LoadLossEstimator estimator(network, settings);
  return estimator.estimate_lv(faults, megs, inputs, storage_plan);
}

std::vector<MegInjection> supplying_megs(const SystemState& state) {
  std::vector<MegInjection> out;
  for (const auto& m : state.megs) {
    if (m.supplying && m.bus()) out.push_back({*m.bus(), m.max_active});
  }
  return out;
}

void register_exact_dispatch(const std::string& name, DispatchFunction fn) {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  r.functions[name] = std::move(fn);
}

bool has_exact_dispatch(const std::string& name) {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  return r.functions.count(name) != 0;
}

void check_dispatch_mode(const std::string& mode) {
  if (mode == "approx") return;
  if (mode.rfind("exact:", 0) == 0) {
    if (has_exact_dispatch(mode.substr(6))) return;
    throw ValidationError("no exact dispatcher registered under '" + mode.substr(6) + "'");
  }
  throw ValidationError("unknown dispatch mode '" + mode + "'");
}

DispatchResult period_cost(const Network& network, const SystemState& state, const LossSettings& settings) {
  if (settings.dispatch == "approx") {
    LoadLossEstimator estimator(network, settings);
    return estimator.dispatch_state(state);
  }
  check_dispatch_mode(settings.dispatch);
  DispatchFunction fn;
  {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    fn = r.functions.at(settings.dispatch.substr(6));
  }
  return fn(network, state, settings);
}

}  // namespace gridrestore
