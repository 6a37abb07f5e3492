#include "gridrestore/instance.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gridrestore/errors.hpp"

namespace gridrestore {

namespace {

using nlohmann::json;

/// Reads fields of one JSON object and rejects any key that was never asked for.
class ObjectReader {
 public:
  ObjectReader(const json& object, std::string where) : object_(object), where_(std::move(where)) {
    if (!object_.is_object()) throw ParseError(where_ + ": expected an object");
  }

  ObjectReader(const ObjectReader&) = delete;
  ObjectReader& operator=(const ObjectReader&) = delete;

  ~ObjectReader() noexcept(false) {
    if (std::uncaught_exceptions() == 0) finish();
  }

  [[nodiscard]] bool has(const std::string& key) {
    used_.insert(key);
    return object_.contains(key);
  }

  const json& at(const std::string& key) {
    used_.insert(key);
    if (!object_.contains(key)) throw ParseError(where_ + ": missing field '" + key + "'");
    return object_.at(key);
  }

  std::string where(const std::string& key) const { return where_ + "." + key; }

  std::string string(const std::string& key) { return as_string(at(key), where(key)); }
  std::string string_or(const std::string& key, std::string fallback) {
    return has(key) ? as_string(object_.at(key), where(key)) : std::move(fallback);
  }

  double number(const std::string& key) { return as_number(at(key), where(key)); }
  double number_or(const std::string& key, double fallback) {
    return has(key) ? as_number(object_.at(key), where(key)) : fallback;
  }

  int integer(const std::string& key) { return as_integer(at(key), where(key)); }
  int integer_or(const std::string& key, int fallback) {
    return has(key) ? as_integer(object_.at(key), where(key)) : fallback;
  }

  bool boolean_or(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& v = object_.at(key);
    if (!v.is_boolean()) throw ParseError(where(key) + ": expected a boolean");
    return v.get<bool>();
  }

  const json& array(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_array()) throw ParseError(where(key) + ": expected an array");
    return v;
  }

  const json* array_or_null(const std::string& key) {
    if (!has(key)) return nullptr;
    const auto& v = object_.at(key);
    if (!v.is_array()) throw ParseError(where(key) + ": expected an array");
    return &v;
  }

  static std::string as_string(const json& v, const std::string& where) {
    if (!v.is_string()) throw ParseError(where + ": expected a string");
    return v.get<std::string>();
  }

  static double as_number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ParseError(where + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ParseError(where + ": expected a finite number");
    return d;
  }

  static int as_integer(const json& v, const std::string& where) {
    if (!v.is_number_integer()) throw ParseError(where + ": expected an integer");
    return v.get<int>();
  }

 private:
  void finish() const {
    for (const auto& [key, value] : object_.items()) {
      if (!used_.count(key)) throw ParseError(where_ + ": unknown field '" + key + "'");
    }
  }

  const json& object_;
  std::string where_;
  std::set<std::string> used_;
};

Point read_point(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2) throw ParseError(where + ": expected [x, y]");
  return {ObjectReader::as_number(v[0], where + "[0]"), ObjectReader::as_number(v[1], where + "[1]")};
}

SourceKind parse_kind(const std::string& s, const std::string& where) {
  if (s == "substation") return SourceKind::substation;
  if (s == "distributed") return SourceKind::distributed;
  if (s == "renewable") return SourceKind::renewable;
  throw ParseError(where + ": unknown source kind '" + s + "'");
}

WaodMode parse_waod(const std::string& s, const std::string& where) {
  if (s == "any_shortfall") return WaodMode::any_shortfall;
  if (s == "full_outage") return WaodMode::full_outage;
  throw ParseError(where + ": unknown waod_mode '" + s + "'");
}

template <class Lookup>
auto resolve(const Lookup& lookup, const std::string& id, const std::string& what, const std::string& where) {
  auto found = lookup(id);
  if (!found) throw ValidationError(where + ": unknown " + what + " '" + id + "'");
  return *found;
}

std::map<std::string, std::vector<double>> read_profile_table(const json& v, const std::string& where) {
  if (!v.is_object()) throw ParseError(where + ": expected an object of profiles");
  std::map<std::string, std::vector<double>> out;
  for (const auto& [name, values] : v.items()) {
    const auto w = where + "." + name;
    if (!values.is_array() || values.empty()) throw ParseError(w + ": expected a nonempty array");
    std::vector<double> series;
    series.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double m = ObjectReader::as_number(values[i], w);
      if (m < 0.0) throw ValidationError(w + ": negative multiplier");
      series.push_back(m);
    }
    out.emplace(name, std::move(series));
  }
  return out;
}

double profile_value(const std::map<std::string, std::vector<double>>& table, const std::string& name, int period) {
  if (name.empty()) return 1.0;
  const auto& series = table.at(name);
  const auto idx = std::min<std::size_t>(static_cast<std::size_t>(std::max(period, 0)), series.size() - 1);
  return series[idx];
}

Instance parse(const json& doc) {
  ObjectReader top(doc, "instance");
  const auto name = top.string_or("name", "instance");

  EngineSettings settings;
  settings.delta_t = top.number_or("delta_t", settings.delta_t);
  settings.horizon = top.integer_or("horizon", settings.horizon);
  settings.dispatch = top.string_or("dispatch", settings.dispatch);
  settings.lv_weighted = top.boolean_or("lv_weighted", settings.lv_weighted);
  if (top.has("waod_mode")) settings.waod_mode = parse_waod(top.string("waod_mode"), "instance.waod_mode");
  if (!(settings.delta_t > 0.0)) throw ValidationError("delta_t must be positive");
  if (settings.horizon < 1) throw ValidationError("horizon must be at least 1");
  const double travel_speed = top.number("travel_speed");

  Profiles profiles;
  if (top.has("profiles")) {
    ObjectReader p(top.at("profiles"), "instance.profiles");
    if (p.has("load")) profiles.load = read_profile_table(p.at("load"), "instance.profiles.load");
    if (p.has("pv")) profiles.pv = read_profile_table(p.at("pv"), "instance.profiles.pv");
  }

  std::vector<Bus> buses;
  std::unordered_map<std::string, BusId> bus_ids;
  const auto& bus_array = top.array("buses");
  for (std::size_t i = 0; i < bus_array.size(); ++i) {
    ObjectReader r(bus_array[i], "instance.buses[" + std::to_string(i) + "]");
    Bus b;
    b.id = r.string("id");
    b.coords = read_point(r.at("coords"), r.where("coords"));
    b.demand_active = r.number_or("demand_kw", 0.0);
    b.demand_reactive = r.number_or("demand_kvar", 0.0);
    b.profile = r.string_or("profile", "");
    b.shed_cost = r.number("shed_cost");
    b.is_substation = r.boolean_or("substation", false);
    b.is_access_point = r.boolean_or("access_point", false);
    if (!b.profile.empty() && !profiles.load.count(b.profile))
      throw ValidationError("bus '" + b.id + "': unknown load profile '" + b.profile + "'");
    bus_ids.emplace(b.id, BusId{buses.size()});
    buses.push_back(std::move(b));
  }
  const auto bus_lookup = [&](const std::string& id) -> std::optional<BusId> {
    if (auto it = bus_ids.find(id); it != bus_ids.end()) return it->second;
    return std::nullopt;
  };

  std::vector<Line> lines;
  const auto& line_array = top.array("lines");
  for (std::size_t i = 0; i < line_array.size(); ++i) {
    const auto where = "instance.lines[" + std::to_string(i) + "]";
    ObjectReader r(line_array[i], where);
    Line l;
    l.id = r.string("id");
    l.from = resolve(bus_lookup, r.string("from"), "bus", where);
    l.to = resolve(bus_lookup, r.string("to"), "bus", where);
    l.capacity_active = r.number("capacity_kw");
    l.capacity_reactive = r.number_or("capacity_kvar", 0.0);
    l.is_switchable = r.boolean_or("switchable", false);
    l.normally_open = r.boolean_or("normally_open", false);
    l.resistance = r.number_or("r", 0.0);
    l.reactance = r.number_or("x", 0.0);
    if (l.normally_open && !l.is_switchable)
      throw ValidationError("line '" + l.id + "': only switchable lines may be normally open");
    lines.push_back(std::move(l));
  }

  std::vector<SourceUnit> sources;
  if (const auto* arr = top.array_or_null("sources")) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const auto where = "instance.sources[" + std::to_string(i) + "]";
      ObjectReader r((*arr)[i], where);
      SourceUnit s;
      s.id = r.string("id");
      s.bus = resolve(bus_lookup, r.string("bus"), "bus", where);
      s.kind = parse_kind(r.string("kind"), r.where("kind"));
      s.max_active = r.number("max_kw");
      s.max_reactive = r.number_or("max_kvar", 0.0);
      s.profile = r.string_or("profile", "");
      if (!s.profile.empty() && !profiles.pv.count(s.profile))
        throw ValidationError("source '" + s.id + "': unknown pv profile '" + s.profile + "'");
      sources.push_back(std::move(s));
    }
  }

  std::vector<StorageUnit> storages;
  if (const auto* arr = top.array_or_null("storages")) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const auto where = "instance.storages[" + std::to_string(i) + "]";
      ObjectReader r((*arr)[i], where);
      StorageUnit s;
      s.id = r.string("id");
      s.bus = resolve(bus_lookup, r.string("bus"), "bus", where);
      s.energy_min = r.number_or("energy_min", 0.0);
      s.energy_max = r.number("energy_max");
      s.power_max = r.number("power_max");
      s.efficiency = r.number_or("efficiency", 1.0);
      s.initial_energy = r.number_or("initial_energy", s.energy_min);
      storages.push_back(std::move(s));
    }
  }

  std::vector<Depot> depots;
  if (const auto* arr = top.array_or_null("depots")) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const auto where = "instance.depots[" + std::to_string(i) + "]";
      ObjectReader r((*arr)[i], where);
      depots.push_back({r.string("id"), read_point(r.at("coords"), r.where("coords"))});
    }
  }

  Network network(std::move(buses), std::move(lines), std::move(sources), std::move(storages), std::move(depots),
                  travel_speed);
  const auto line_lookup = [&](const std::string& id) { return network.find_line(id); };
  const auto depot_lookup = [&](const std::string& id) { return network.find_depot(id); };

  std::vector<CrewSpec> crews;
  if (const auto* arr = top.array_or_null("crews")) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const auto where = "instance.crews[" + std::to_string(i) + "]";
      ObjectReader r((*arr)[i], where);
      crews.push_back({r.string("id"), resolve(depot_lookup, r.string("depot"), "depot", where)});
    }
  }

  std::vector<MegSpec> megs;
  if (const auto* arr = top.array_or_null("megs")) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const auto where = "instance.megs[" + std::to_string(i) + "]";
      ObjectReader r((*arr)[i], where);
      MegSpec m;
      m.id = r.string("id");
      m.depot = resolve(depot_lookup, r.string("depot"), "depot", where);
      m.max_active = r.number("max_kw");
      m.max_reactive = r.number_or("max_kvar", 0.0);
      if (m.max_active < 0.0) throw ValidationError(where + ": negative MEG capacity");
      megs.push_back(std::move(m));
    }
  }

  std::vector<FaultSpec> faults;
  if (const auto* arr = top.array_or_null("faults")) {
    std::set<std::uint32_t> seen;
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const auto where = "instance.faults[" + std::to_string(i) + "]";
      ObjectReader r((*arr)[i], where);
      FaultSpec f;
      f.line = resolve(line_lookup, r.string("line"), "line", where);
      if (r.has("repair_time")) f.repair_time = r.integer("repair_time");
      if (r.has("estimated_repair_time")) f.estimated_repair_time = r.number("estimated_repair_time");
      f.discovery_period = r.integer_or("discovery_period", 0);
      f.known = r.boolean_or("known", false);
      if (f.repair_time && *f.repair_time < 1) throw ValidationError(where + ": repair_time must be at least 1");
      if (f.estimated_repair_time && !(*f.estimated_repair_time > 0.0))
        throw ValidationError(where + ": estimated_repair_time must be positive");
      if (f.discovery_period < 0) throw ValidationError(where + ": negative discovery_period");
      if (f.known && !f.repair_time) throw ValidationError(where + ": a known fault needs repair_time");
      if (!seen.insert(f.line.value).second) throw ValidationError(where + ": line faulted twice");
      faults.push_back(f);
    }
  }

  UncertaintyPriors priors;
  if (top.has("priors")) {
    ObjectReader r(top.at("priors"), "instance.priors");
    if (r.has("repair_time")) {
      ObjectReader w(r.at("repair_time"), "instance.priors.repair_time");
      priors.repair_shape = w.number_or("shape", priors.repair_shape);
      priors.repair_scale = w.number_or("scale", priors.repair_scale);
    }
    priors.pv_error_std = r.number_or("pv_error_std", 0.0);
    priors.load_error_halfwidth = r.number_or("load_error_halfwidth", 0.0);
    if (const auto* arr = r.array_or_null("new_faults")) {
      for (std::size_t i = 0; i < arr->size(); ++i) {
        const auto where = "instance.priors.new_faults[" + std::to_string(i) + "]";
        ObjectReader n((*arr)[i], where);
        NewFaultPrior p;
        p.line = resolve(line_lookup, n.string("line"), "line", where);
        p.probability = n.number("probability");
        const auto& window = n.array("window");
        if (window.size() != 2) throw ParseError(where + ".window: expected [first, last]");
        p.window_begin = ObjectReader::as_integer(window[0], where + ".window");
        p.window_end = ObjectReader::as_integer(window[1], where + ".window");
        priors.new_faults.push_back(p);
      }
    }
  }
  priors.validate();

  GroundTruthSpec truth;
  if (top.has("ground_truth")) {
    ObjectReader r(top.at("ground_truth"), "instance.ground_truth");
    if (r.has("repair_time_range")) {
      const auto& range = r.array("repair_time_range");
      if (range.size() != 2) throw ParseError("instance.ground_truth.repair_time_range: expected [min, max]");
      truth.repair_time_min = ObjectReader::as_integer(range[0], "instance.ground_truth.repair_time_range");
      truth.repair_time_max = ObjectReader::as_integer(range[1], "instance.ground_truth.repair_time_range");
    }
  }
  if (truth.repair_time_min < 1 || truth.repair_time_max < truth.repair_time_min)
    throw ValidationError("ground_truth.repair_time_range must satisfy 1 <= min <= max");

  if (settings.dispatch != "approx" && settings.dispatch.rfind("exact:", 0) != 0)
    throw ValidationError("dispatch must be \"approx\" or \"exact:<name>\"");

  return Instance{name,   std::move(network), std::move(faults), std::move(crews), std::move(megs),
                  std::move(profiles), std::move(priors), truth,  settings};
}

json profile_json(const std::map<std::string, std::vector<double>>& table) {
  json out = json::object();
  for (const auto& [name, series] : table) out[name] = series;
  return out;
}

}  // namespace

double UncertaintyPriors::repair_time_mean() const { return repair_scale * std::tgamma(1.0 + 1.0 / repair_shape); }

void UncertaintyPriors::validate() const {
  if (!(repair_shape > 0.0) || !(repair_scale > 0.0)) throw ValidationError("Weibull shape and scale must be positive");
  if (!(pv_error_std >= 0.0)) throw ValidationError("pv_error_std must be nonnegative");
  if (!(load_error_halfwidth >= 0.0 && load_error_halfwidth < 1.0))
    throw ValidationError("load_error_halfwidth must lie in [0, 1)");
  for (const auto& p : new_faults) {
    if (!(p.probability >= 0.0 && p.probability <= 1.0))
      throw ValidationError("new fault probability must lie in [0, 1]");
    if (p.window_begin < 1 || p.window_end < p.window_begin)
      throw ValidationError("new fault window must satisfy 1 <= first <= last");
  }
}

PeriodInputs Instance::forecast(int period) const {
  PeriodInputs out;
  forecast(period, out);
  return out;
}

void Instance::forecast(int period, PeriodInputs& out) const {
  const auto buses = network.buses();
  out.load_demands.resize(buses.size());
  for (std::size_t i = 0; i < buses.size(); ++i)
    out.load_demands[i] = buses[i].demand_active * profile_value(profiles.load, buses[i].profile, period);
  const auto sources = network.sources();
  out.source_caps.resize(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& s = sources[i];
    out.source_caps[i] =
        s.kind == SourceKind::renewable ? s.max_active * profile_value(profiles.pv, s.profile, period) : s.max_active;
  }
}

Instance load_instance(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed instance document: ") + e.what());
  }
  try {
    return parse(doc);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed instance document: ") + e.what());
  }
}

Instance load_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open instance file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_instance(buffer.str());
}

Network load_network(std::string_view document) { return load_instance(document).network; }

std::string dump_instance(const Instance& instance) {
  const auto& net = instance.network;
  json doc;
  doc["name"] = instance.name;
  doc["delta_t"] = instance.settings.delta_t;
  doc["horizon"] = instance.settings.horizon;
  doc["dispatch"] = instance.settings.dispatch;
  doc["lv_weighted"] = instance.settings.lv_weighted;
  doc["waod_mode"] = std::string(to_string(instance.settings.waod_mode));
  doc["travel_speed"] = net.travel_speed();

  json buses = json::array();
  for (const auto& b : net.buses()) {
    json j{{"id", b.id}, {"coords", {b.coords.x, b.coords.y}}, {"demand_kw", b.demand_active},
           {"shed_cost", b.shed_cost}};
    if (b.demand_reactive != 0.0) j["demand_kvar"] = b.demand_reactive;
    if (!b.profile.empty()) j["profile"] = b.profile;
    if (b.is_substation) j["substation"] = true;
    if (b.is_access_point) j["access_point"] = true;
    buses.push_back(std::move(j));
  }
  doc["buses"] = std::move(buses);

  json lines = json::array();
  for (const auto& l : net.lines()) {
    json j{{"id", l.id}, {"from", net.bus(l.from).id}, {"to", net.bus(l.to).id}, {"capacity_kw", l.capacity_active}};
    if (l.capacity_reactive != 0.0) j["capacity_kvar"] = l.capacity_reactive;
    if (l.is_switchable) j["switchable"] = true;
    if (l.normally_open) j["normally_open"] = true;
    if (l.resistance != 0.0) j["r"] = l.resistance;
    if (l.reactance != 0.0) j["x"] = l.reactance;
    lines.push_back(std::move(j));
  }
  doc["lines"] = std::move(lines);

  json sources = json::array();
  for (const auto& s : net.sources()) {
    json j{{"id", s.id}, {"bus", net.bus(s.bus).id}, {"kind", std::string(to_string(s.kind))}, {"max_kw", s.max_active}};
    if (s.max_reactive != 0.0) j["max_kvar"] = s.max_reactive;
    if (!s.profile.empty()) j["profile"] = s.profile;
    sources.push_back(std::move(j));
  }
  doc["sources"] = std::move(sources);

  json storages = json::array();
  for (const auto& s : net.storages()) {
    storages.push_back({{"id", s.id},
                        {"bus", net.bus(s.bus).id},
                        {"energy_min", s.energy_min},
                        {"energy_max", s.energy_max},
                        {"power_max", s.power_max},
                        {"efficiency", s.efficiency},
                        {"initial_energy", s.initial_energy}});
  }
  doc["storages"] = std::move(storages);

  json depots = json::array();
  for (const auto& d : net.depots()) depots.push_back({{"id", d.id}, {"coords", {d.coords.x, d.coords.y}}});
  doc["depots"] = std::move(depots);

  json crews = json::array();
  for (const auto& c : instance.crews) crews.push_back({{"id", c.id}, {"depot", net.depot(c.depot).id}});
  doc["crews"] = std::move(crews);

  json megs = json::array();
  for (const auto& m : instance.megs) {
    json j{{"id", m.id}, {"depot", net.depot(m.depot).id}, {"max_kw", m.max_active}};
    if (m.max_reactive != 0.0) j["max_kvar"] = m.max_reactive;
    megs.push_back(std::move(j));
  }
  doc["megs"] = std::move(megs);

  json faults = json::array();
  for (const auto& f : instance.faults) {
    json j{{"line", net.line(f.line).id}, {"discovery_period", f.discovery_period}};
    if (f.repair_time) j["repair_time"] = *f.repair_time;
    if (f.estimated_repair_time) j["estimated_repair_time"] = *f.estimated_repair_time;
    if (f.known) j["known"] = true;
    faults.push_back(std::move(j));
  }
  doc["faults"] = std::move(faults);

  doc["profiles"] = {{"load", profile_json(instance.profiles.load)}, {"pv", profile_json(instance.profiles.pv)}};

  const auto& p = instance.priors;
  json new_faults = json::array();
  for (const auto& n : p.new_faults) {
    new_faults.push_back(
        {{"line", net.line(n.line).id}, {"probability", n.probability}, {"window", {n.window_begin, n.window_end}}});
  }
  doc["priors"] = {{"repair_time", {{"shape", p.repair_shape}, {"scale", p.repair_scale}}},
                   {"pv_error_std", p.pv_error_std},
                   {"load_error_halfwidth", p.load_error_halfwidth},
                   {"new_faults", std::move(new_faults)}};
  doc["ground_truth"] = {
      {"repair_time_range", {instance.ground_truth.repair_time_min, instance.ground_truth.repair_time_max}}};
  return doc.dump(2) + "\n";
}

std::string_view to_string(WaodMode mode) {
  return mode == WaodMode::any_shortfall ? "any_shortfall" : "full_outage";
}

std::string_view to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::substation:
      return "substation";
    case SourceKind::distributed:
      return "distributed";
    case SourceKind::renewable:
      return "renewable";
  }
  return "distributed";
}

}  // namespace gridrestore
