#include "gridrestore/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "gridrestore/errors.hpp"

namespace gridrestore {

namespace {

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("periods csv line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
}

}  // namespace

Metrics compute_metrics(const RunRecord& record, const Network& network, double delta_t, WaodMode mode) {
  const auto buses = network.buses();
  std::vector<double> outage_hours(buses.size(), 0.0);
  Metrics m;
  for (const auto& p : record.periods) {
    for (std::size_t i = 0; i < buses.size(); ++i) {
      const double shortfall = std::max(0.0, p.demand[i] - p.served[i]);
      m.el += buses[i].shed_cost * shortfall * delta_t;
      m.tens += shortfall * delta_t;
      const bool out = mode == WaodMode::any_shortfall
                           ? shortfall > kOutageThreshold
                           : p.demand[i] > kOutageThreshold && p.served[i] <= kOutageThreshold;
      if (out) outage_hours[i] += delta_t;
    }
  }
  double weighted = 0.0;
  double weights = 0.0;
  for (std::size_t i = 0; i < buses.size(); ++i) {
    weighted += buses[i].shed_cost * outage_hours[i];
    weights += buses[i].shed_cost;
  }
  m.waod = weights > 0.0 ? weighted / weights : 0.0;
  return m;
}

void write_periods_csv(std::ostream& out, const RunRecord& record, const Network& network) {
  out << "period,bus_id,demand_kw,served_kw,shed_cost,island_id\n";
  const auto buses = network.buses();
  for (const auto& p : record.periods) {
    for (std::size_t i = 0; i < buses.size(); ++i) {
      out << p.period << ',' << buses[i].id << ',' << number(p.demand[i]) << ',' << number(p.served[i]) << ','
          << number(buses[i].shed_cost) << ',' << (i < p.island_of.size() ? p.island_of[i] : 0) << '\n';
    }
  }
}

void write_actions_csv(std::ostream& out, const RunRecord& record) {
  out << "period,unit_id,unit_kind,event,target\n";
  for (const auto& a : record.actions)
    out << a.period << ',' << a.unit_id << ',' << a.unit_kind << ',' << a.event << ',' << a.target << '\n';
}

RunRecord read_periods_csv(std::istream& in, const Network& network) {
  std::string line;
  if (!std::getline(in, line) || line != "period,bus_id,demand_kw,served_kw,shed_cost,island_id")
    throw ParseError("periods csv: missing or unexpected header");
  RunRecord record;
  const auto n = network.bus_count();
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 6) throw ParseError("periods csv line " + std::to_string(line_no) + ": expected 6 columns");
    const int period = static_cast<int>(parse_double(cells[0], line_no));
    const auto bus = network.find_bus(cells[1]);
    if (!bus) throw ParseError("periods csv line " + std::to_string(line_no) + ": unknown bus '" + cells[1] + "'");
    if (record.periods.empty() || record.periods.back().period != period) {
      PeriodRecord p;
      p.period = period;
      p.demand.assign(n, 0.0);
      p.served.assign(n, 0.0);
      p.island_of.assign(n, 0);
      record.periods.push_back(std::move(p));
    }
    auto& p = record.periods.back();
    p.demand[bus->index()] = parse_double(cells[2], line_no);
    p.served[bus->index()] = parse_double(cells[3], line_no);
    p.island_of[bus->index()] = static_cast<std::uint32_t>(parse_double(cells[5], line_no));
  }
  return record;
}

void write_summary(std::ostream& out, const std::string& instance_name, PolicyKind policy,
                   const std::vector<SeedResult>& runs) {
  out << "instance " << instance_name << '\n';
  out << "policy " << to_string(policy) << '\n';
  out << "runs " << runs.size() << '\n';
  Metrics mean;
  for (const auto& r : runs) {
    double total_seconds = 0.0;
    double max_seconds = 0.0;
    for (double s : r.record.decision_seconds) {
      total_seconds += s;
      max_seconds = std::max(max_seconds, s);
    }
    const auto decisions = r.record.decision_seconds.size();
    out << "seed " << r.seed << " el " << number(r.metrics.el) << " tens " << number(r.metrics.tens) << " waod "
        << number(r.metrics.waod) << " total_cost " << number(r.record.total_cost) << " periods "
        << r.record.periods.size() << " decisions " << decisions << " decision_seconds_mean "
        << number(decisions ? total_seconds / static_cast<double>(decisions) : 0.0) << " decision_seconds_max "
        << number(max_seconds) << '\n';
    mean.el += r.metrics.el;
    mean.tens += r.metrics.tens;
    mean.waod += r.metrics.waod;
  }
  if (!runs.empty()) {
    const auto n = static_cast<double>(runs.size());
    out << "mean el " << number(mean.el / n) << " tens " << number(mean.tens / n) << " waod "
        << number(mean.waod / n) << '\n';
  }
}

}  // namespace gridrestore
