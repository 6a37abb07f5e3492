#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gridrestore/generator.hpp"
#include "gridrestore/instance.hpp"
#include "gridrestore/network.hpp"

namespace gridrestore::testing {

inline std::string data_file(const std::string& name) { return std::string(GRIDRESTORE_DATA_DIR) + "/" + name; }

inline std::string read_text(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline LineId line_of(const Network& net, const char* id) { return *net.find_line(id); }
inline BusId bus_of(const Network& net, const char* id) { return *net.find_bus(id); }

struct LineDef {
  std::size_t from;
  std::size_t to;
  bool switchable{false};
  double capacity{1000.0};
};

/// Buses "1".."n" on a row, bus 1 a substation with `source_kw`, lines named L<from><to>.
inline Network make_network(const std::vector<double>& demand, const std::vector<double>& cost,
                            const std::vector<LineDef>& lines, double source_kw = 1000.0,
                            std::vector<std::size_t> access_points = {}) {
  std::vector<Bus> buses;
  for (std::size_t i = 0; i < demand.size(); ++i) {
    Bus b;
    b.id = std::to_string(i + 1);
    b.coords = {static_cast<double>(i), 0.0};
    b.demand_active = demand[i];
    b.shed_cost = cost[i];
    b.is_substation = i == 0;
    for (const auto a : access_points) b.is_access_point |= a == i;
    buses.push_back(std::move(b));
  }
  std::vector<Line> out;
  for (const auto& d : lines) {
    Line l;
    l.id = "L" + std::to_string(d.from + 1) + std::to_string(d.to + 1);
    l.from = BusId{d.from};
    l.to = BusId{d.to};
    l.capacity_active = d.capacity;
    l.is_switchable = d.switchable;
    out.push_back(std::move(l));
  }
  std::vector<SourceUnit> sources{{"S1", BusId{std::size_t{0}}, SourceKind::substation, source_kw, 0.0, ""}};
  std::vector<Depot> depots{{"D1", {0.0, 0.5}}};
  return Network(std::move(buses), std::move(out), std::move(sources), {}, std::move(depots), 1.0);
}

/// tiny6 with an extra switchable line between buses 2 and 6.
inline Network tiny6_with_tie() {
  const auto base = tiny6_instance();
  std::vector<Bus> buses(base.network.buses().begin(), base.network.buses().end());
  std::vector<Line> lines(base.network.lines().begin(), base.network.lines().end());
  Line tie;
  tie.id = "L26";
  tie.from = BusId{std::size_t{1}};
  tie.to = BusId{std::size_t{5}};
  tie.capacity_active = 1000.0;
  tie.is_switchable = true;
  lines.push_back(tie);
  std::vector<SourceUnit> sources(base.network.sources().begin(), base.network.sources().end());
  std::vector<Depot> depots(base.network.depots().begin(), base.network.depots().end());
  return Network(std::move(buses), std::move(lines), std::move(sources), {}, std::move(depots), 1.0);
}

/// Connected components by breadth-first search over closed lines, as a label per bus.
inline std::vector<int> bfs_components(const Network& net, const LineStatusMap& status) {
  std::vector<int> label(net.bus_count(), -1);
  int next = 0;
  for (std::size_t s = 0; s < net.bus_count(); ++s) {
    if (label[s] >= 0) continue;
    std::vector<std::size_t> queue{s};
    label[s] = next;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      for (std::size_t l = 0; l < net.line_count(); ++l) {
        if (!status.closed(LineId{l})) continue;
        const auto& line = net.line(LineId{l});
        std::size_t other = net.bus_count();
        if (line.from.index() == queue[q]) other = line.to.index();
        if (line.to.index() == queue[q]) other = line.from.index();
        if (other < net.bus_count() && label[other] < 0) {
          label[other] = next;
          queue.push_back(other);
        }
      }
    }
    ++next;
  }
  return label;
}

}  // namespace gridrestore::testing
