#include "gridrestore/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "gridrestore/errors.hpp"

namespace gridrestore {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string name(char prefix, std::size_t i) { return std::string(1, prefix) + std::to_string(i + 1); }

/// 96 quarter-hour multipliers: overnight trough, evening peak.
std::vector<double> load_profile() {
  std::vector<double> v(96);
  for (int t = 0; t < 96; ++t) {
    const double hour = t * 0.25;
    v[t] = 0.75 + 0.15 * std::sin((hour - 9.0) * kPi / 12.0) + 0.15 * std::exp(-std::pow((hour - 19.0) / 2.0, 2.0));
  }
  return v;
}

/// 96 quarter-hour multipliers: zero at night, bell between 6:00 and 18:00.
std::vector<double> pv_profile() {
  std::vector<double> v(96, 0.0);
  for (int t = 0; t < 96; ++t) {
    const double hour = t * 0.25;
    if (hour > 6.0 && hour < 18.0) v[t] = std::sin((hour - 6.0) * kPi / 12.0);
  }
  return v;
}

template <class T>
std::vector<std::size_t> pick(std::mt19937_64& rng, const std::vector<T>& pool, std::size_t count) {
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(count, idx.size()));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

Instance generate_instance(const GeneratorSpec& spec) {
  if (spec.buses < 6) throw ValidationError("generator needs at least 6 buses");
  if (spec.faults > spec.buses - 1) throw ValidationError("more faults than feeder lines");
  if (spec.depots < 1) throw ValidationError("generator needs at least one depot");
  if (!spec.deterministic && spec.staged_faults > spec.faults)
    throw ValidationError("more staged faults than faults");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  const auto integer = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  const std::size_t n = spec.buses;
  std::vector<Bus> buses(n);
  std::vector<Line> lines;
  std::vector<std::size_t> parent(n, 0);
  std::vector<std::size_t> children(n, 0);
  buses[0].id = name('B', 0);
  buses[0].is_substation = true;
  buses[0].shed_cost = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t lo = i > 8 ? i - 8 : 0;
    parent[i] = unit(rng) < 0.6 ? i - 1 : static_cast<std::size_t>(integer(static_cast<int>(lo), static_cast<int>(i - 1)));
    auto& b = buses[i];
    const auto& p = buses[parent[i]];
    const auto k = children[parent[i]]++;
    // First child continues the feeder to the right, later ones branch up or down.
    b.coords = k == 0 ? Point{p.coords.x + 0.5, p.coords.y}
                      : Point{p.coords.x + 0.25, p.coords.y + (k % 2 ? 0.5 : -0.5) * static_cast<double>((k + 1) / 2)};
    b.id = name('B', i);
    b.demand_active = std::round(uniform(10.0, 60.0) * 10.0) / 10.0;
    b.shed_cost = integer(5, 20);
    b.profile = "residential";
    Line l;
    l.id = name('L', lines.size());
    l.from = BusId{parent[i]};
    l.to = BusId{i};
    l.capacity_active = 5000.0;
    l.is_switchable = unit(rng) < 0.1;
    l.resistance = std::round(uniform(0.01, 0.1) * 1000.0) / 1000.0;
    l.reactance = l.resistance * 2.0;
    lines.push_back(std::move(l));
  }
  const std::size_t tree_lines = lines.size();

  // Normally open ties between buses that are not neighbours.
  const std::size_t ties = n / 30;
  std::set<std::pair<std::size_t, std::size_t>> used;
  for (std::size_t i = 1; i < n; ++i) used.emplace(std::min(i, parent[i]), std::max(i, parent[i]));
  for (std::size_t made = 0, tries = 0; made < ties && tries < 1000; ++tries) {
    const auto a = static_cast<std::size_t>(integer(1, static_cast<int>(n - 1)));
    const auto b = static_cast<std::size_t>(integer(1, static_cast<int>(n - 1)));
    if (a == b || !used.emplace(std::min(a, b), std::max(a, b)).second) continue;
    Line l;
    l.id = name('L', lines.size());
    l.from = BusId{std::min(a, b)};
    l.to = BusId{std::max(a, b)};
    l.capacity_active = 5000.0;
    l.is_switchable = true;
    l.normally_open = true;
    l.resistance = 0.05;
    l.reactance = 0.1;
    lines.push_back(std::move(l));
    ++made;
  }

  double total_demand = 0.0;
  for (const auto& b : buses) total_demand += b.demand_active;

  std::vector<std::size_t> load_buses(n - 1);
  std::iota(load_buses.begin(), load_buses.end(), 1);
  std::vector<SourceUnit> sources;
  sources.push_back({"SUB", BusId{std::size_t{0}}, SourceKind::substation, std::ceil(total_demand * 1.5), 0.0, ""});
  for (auto i : pick(rng, load_buses, std::max<std::size_t>(1, n / 40))) {
    sources.push_back({name('G', sources.size() - 1), BusId{load_buses[i]}, SourceKind::distributed,
                       static_cast<double>(integer(6, 15) * 10), 0.0, ""});
  }
  const auto dg_count = sources.size() - 1;
  for (auto i : pick(rng, load_buses, std::max<std::size_t>(1, n / 30))) {
    sources.push_back({name('P', sources.size() - 1 - dg_count), BusId{load_buses[i]}, SourceKind::renewable,
                       static_cast<double>(integer(3, 10) * 10), 0.0, "pv"});
  }

  std::vector<StorageUnit> storages;
  for (auto i : pick(rng, load_buses, std::max<std::size_t>(1, n / 60))) {
    const double cap = integer(10, 30) * 10.0;
    storages.push_back({name('S', storages.size()), BusId{load_buses[i]}, 0.1 * cap, cap,
                        static_cast<double>(integer(3, 8) * 10), 0.95, 0.5 * cap});
  }

  for (auto i : pick(rng, load_buses, std::max<std::size_t>(2, n / 12))) buses[load_buses[i]].is_access_point = true;

  double max_x = 0.0;
  double max_y = 0.0;
  for (const auto& b : buses) {
    max_x = std::max(max_x, b.coords.x);
    max_y = std::max(max_y, b.coords.y);
  }
  std::vector<Depot> depots;
  for (std::size_t d = 0; d < spec.depots; ++d) {
    const double frac = (static_cast<double>(d) + 0.5) / static_cast<double>(spec.depots);
    depots.push_back({name('D', d), {max_x * frac, max_y + 0.5}});
  }
  // About four periods for the longest trip from a depot.
  double longest = 0.0;
  for (const auto& d : depots)
    for (const auto& b : buses) longest = std::max(longest, manhattan(d.coords, b.coords));
  const double travel_speed = std::max(0.5, std::round(longest / 4.0 * 4.0) / 4.0);

  std::vector<Line> fault_pool(lines.begin(), lines.begin() + static_cast<std::ptrdiff_t>(tree_lines));
  const auto fault_lines = pick(rng, fault_pool, spec.faults);

  Network network(std::move(buses), std::move(lines), std::move(sources), std::move(storages), std::move(depots),
                  travel_speed);

  Instance inst{"synthetic-" + std::to_string(n) + "-s" + std::to_string(spec.seed), std::move(network), {}, {}, {},
                {}, {}, {}, {}};
  inst.profiles.load["residential"] = load_profile();
  inst.profiles.pv["pv"] = pv_profile();

  // Shuffle before staging so the late discoveries are spread over the feeder.
  std::vector<std::size_t> order(fault_lines.begin(), fault_lines.end());
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t staged = spec.deterministic ? 0 : spec.staged_faults;
  const int stage_periods[] = {4, 6, 12};
  for (std::size_t k = 0; k < order.size(); ++k) {
    FaultSpec f;
    f.line = LineId{order[k]};
    if (spec.deterministic) {
      f.repair_time = integer(2, 8);
      f.known = true;
    }
    if (k >= order.size() - staged) {
      const auto s = k - (order.size() - staged);
      f.discovery_period = s < 3 ? stage_periods[s] : 12 + 2 * static_cast<int>(s - 2);
    }
    inst.faults.push_back(f);
  }
  std::sort(inst.faults.begin(), inst.faults.end(), [](const FaultSpec& a, const FaultSpec& b) {
    if (a.discovery_period != b.discovery_period) return a.discovery_period < b.discovery_period;
    return a.line < b.line;
  });

  if (!spec.deterministic) {
    inst.priors.pv_error_std = 0.15;
    inst.priors.load_error_halfwidth = 0.1;
    for (const auto& f : inst.faults) {
      if (f.discovery_period > 0) inst.priors.new_faults.push_back({f.line, 0.6, 1, 16});
    }
  }

  for (std::size_t c = 0; c < spec.crews; ++c)
    inst.crews.push_back({name('C', c), DepotId{c % spec.depots}});
  for (std::size_t m = 0; m < spec.megs; ++m)
    inst.megs.push_back({name('M', m), DepotId{m % spec.depots}, static_cast<double>(integer(10, 25) * 10), 0.0});
  return inst;
}

Instance tiny6_instance() {
  std::vector<Bus> buses;
  const double cost[] = {1.0, 10.0, 5.0, 5.0, 20.0, 5.0};
  for (std::size_t i = 0; i < 6; ++i) {
    Bus b;
    b.id = std::to_string(i + 1);
    b.coords = {static_cast<double>(i), 0.0};
    b.demand_active = i == 0 ? 0.0 : 20.0;
    b.shed_cost = cost[i];
    b.is_substation = i == 0;
    b.is_access_point = i == 1 || i == 4;
    buses.push_back(std::move(b));
  }
  std::vector<Line> lines;
  for (std::size_t i = 0; i < 5; ++i) {
    Line l;
    l.id = "L" + std::to_string(i + 1) + std::to_string(i + 2);
    l.from = BusId{i};
    l.to = BusId{i + 1};
    l.capacity_active = 1000.0;
    lines.push_back(std::move(l));
  }
  std::vector<SourceUnit> sources{{"S1", BusId{std::size_t{0}}, SourceKind::substation, 1000.0, 0.0, ""}};
  std::vector<Depot> depots{{"D1", {2.0, 0.5}}};
  Network network(std::move(buses), std::move(lines), std::move(sources), {}, std::move(depots), 1.0);

  Instance inst{"tiny6", std::move(network), {}, {}, {}, {}, {}, {}, {}};
  FaultSpec l23;
  l23.line = *inst.network.find_line("L23");
  l23.repair_time = 2;
  l23.known = true;
  FaultSpec l45;
  l45.line = *inst.network.find_line("L45");
  l45.repair_time = 1;
  l45.known = true;
  inst.faults = {l23, l45};
  inst.crews.push_back({"C1", DepotId{std::size_t{0}}});
  inst.megs.push_back({"M1", DepotId{std::size_t{0}}, 40.0, 0.0});
  return inst;
}

bool is_builtin_instance(std::string_view name) { return name == "tiny6" || name == "medium123"; }

Instance builtin_instance(std::string_view name) {
  if (name == "tiny6") return tiny6_instance();
  if (name == "medium123") {
    auto inst = generate_instance(GeneratorSpec{});
    inst.name = "medium123";
    return inst;
  }
  throw ValidationError("unknown built-in instance '" + std::string(name) + "'");
}

}  // namespace gridrestore
