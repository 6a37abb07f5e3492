#include "gridrestore/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "gridrestore/errors.hpp"

namespace gridrestore {

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0u); }

  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (a < b) std::swap(a, b);
    parent_[a] = b;  // keep the lowest id as representative
    return true;
  }

 private:
  std::vector<std::uint32_t> parent_;
};

constexpr std::uint32_t kUnset = std::numeric_limits<std::uint32_t>::max();

}  // namespace

std::size_t LineStatusMap::closed_count() const {
  return static_cast<std::size_t>(std::count(closed_.begin(), closed_.end(), std::uint8_t{1}));
}

void partition_islands(const Network& network, const LineStatusMap& status, IslandAssignment& out) {
  const auto n = network.bus_count();
  auto& island_of = out.island_of_;
  auto& stack = out.scratch_;
  island_of.assign(n, kUnset);

  // Label by search from each unlabelled bus in id order, then lay members out
  // with a counting pass so every island lists its buses in increasing order.
  std::uint32_t next = 0;
  for (std::size_t root = 0; root < n; ++root) {
    if (island_of[root] != kUnset) continue;
    island_of[root] = next;
    stack.clear();
    stack.push_back(static_cast<std::uint32_t>(root));
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      for (const auto& inc : network.incident(BusId{u})) {
        if (!status.closed(inc.line)) continue;
        const auto v = inc.other.value;
        if (island_of[v] == kUnset) {
          island_of[v] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  out.offsets_.assign(next + 1, 0);
  for (std::size_t b = 0; b < n; ++b) ++out.offsets_[island_of[b] + 1];
  for (std::uint32_t k = 0; k < next; ++k) out.offsets_[k + 1] += out.offsets_[k];
  out.members_.resize(n);
  stack.assign(out.offsets_.begin(), out.offsets_.end() - 1);
  for (std::size_t b = 0; b < n; ++b) out.members_[stack[island_of[b]]++] = BusId{b};
}

IslandAssignment partition_islands(const Network& network, const LineStatusMap& status) {
  IslandAssignment out;
  partition_islands(network, status, out);
  return out;
}

bool is_radial(const Network& network, const LineStatusMap& status) {
  DisjointSets sets(network.bus_count());
  for (std::size_t i = 0; i < network.line_count(); ++i) {
    const LineId id{i};
    if (!status.closed(id)) continue;
    const auto& l = network.line(id);
    if (!sets.unite(l.from.value, l.to.value)) return false;
  }
  return true;
}

LineStatusMap spanning_forest(const Network& network, const LineStatusMap& status) {
  LineStatusMap forest = status;
  DisjointSets sets(network.bus_count());
  for (std::size_t i = 0; i < network.line_count(); ++i) {
    const LineId id{i};
    if (!status.closed(id)) continue;
    const auto& l = network.line(id);
    if (!sets.unite(l.from.value, l.to.value)) forest.open(id);
  }
  return forest;
}

std::vector<LineId> find_cycle(const Network& network, const LineStatusMap& status) {
  DisjointSets sets(network.bus_count());
  LineStatusMap forest(network.line_count(), false);
  for (std::size_t i = 0; i < network.line_count(); ++i) {
    const LineId id{i};
    if (!status.closed(id)) continue;
    const auto& l = network.line(id);
    if (sets.unite(l.from.value, l.to.value)) {
      forest.close(id);
      continue;
    }
    // Path from l.from to l.to through the forest built so far.
    std::vector<LineId> via(network.bus_count(), LineId{kUnset});
    std::vector<std::uint8_t> seen(network.bus_count(), 0);
    std::deque<BusId> queue{l.from};
    seen[l.from.index()] = 1;
    while (!queue.empty() && !seen[l.to.index()]) {
      const auto u = queue.front();
      queue.pop_front();
      for (const auto& inc : network.incident(u)) {
        if (!forest.closed(inc.line) || seen[inc.other.index()]) continue;
        seen[inc.other.index()] = 1;
        via[inc.other.index()] = inc.line;
        queue.push_back(inc.other);
      }
    }
    std::vector<LineId> cycle{id};
    for (BusId b = l.to; b != l.from;) {
      const auto edge = via[b.index()];
      cycle.push_back(edge);
      const auto& e = network.line(edge);
      b = e.from == b ? e.to : e.from;
    }
    std::sort(cycle.begin(), cycle.end());
    return cycle;
  }
  return {};
}

LineStatusMap enforce_radiality(const Network& network, LineStatusMap status, const LossEvaluator& evaluate_loss) {
  for (;;) {
    const auto cycle = find_cycle(network, status);
    if (cycle.empty()) return status;

    std::optional<LineId> best;
    double best_loss = std::numeric_limits<double>::infinity();
    for (const auto id : cycle) {
      if (!network.line(id).is_switchable) continue;
      status.open(id);
      const double loss = evaluate_loss(status);
      status.close(id);
      if (!best || loss < best_loss) {
        best = id;
        best_loss = loss;
      }
    }
    if (!best) {
      throw TopologyError("loop through line '" + network.line(cycle.front()).id +
                          "' contains no switchable line to open");
    }
    status.open(*best);
  }
}

void RadialForest::build(const Network& network, const LineStatusMap& status) {
  partition_islands(network, status, islands_);
  const auto n = network.bus_count();
  order_.clear();
  order_.reserve(n);
  offsets_.clear();
  parent_line_.assign(n, LineId{kUnset});
  is_root_.assign(n, 0);
  visited_.assign(n, 0);

  std::size_t tree_edges = 0;
  for (std::size_t k = 0; k < islands_.island_count(); ++k) {
    offsets_.push_back(static_cast<std::uint32_t>(order_.size()));
    const auto root = islands_.members(k).front();
    is_root_[root.index()] = 1;
    visited_[root.index()] = 1;
    auto head = order_.size();
    order_.push_back(root);
    while (head < order_.size()) {
      const auto u = order_[head++];
      for (const auto& inc : network.incident(u)) {
        if (!status.closed(inc.line) || inc.line == parent_line_[u.index()]) continue;
        if (visited_[inc.other.index()]) throw TopologyError("status is not radial");
        visited_[inc.other.index()] = 1;
        parent_line_[inc.other.index()] = inc.line;
        order_.push_back(inc.other);
        ++tree_edges;
      }
    }
  }
  offsets_.push_back(static_cast<std::uint32_t>(order_.size()));
  if (tree_edges != status.closed_count()) throw TopologyError("status is not radial");
}

double RadialForest::island_flows(const Network& network, std::size_t island, std::span<const double> injections,
                                  std::span<double> flows, std::span<double> subtree) const {
  const auto order = islands_order(island);
  for (const auto b : order) subtree[b.index()] = injections[b.index()];
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto b = *it;
    if (is_root_[b.index()]) continue;
    const auto line_id = parent_line_[b.index()];
    const auto& l = network.line(line_id);
    const BusId parent = l.from == b ? l.to : l.from;
    const double out = subtree[b.index()];  // net export of the subtree towards the parent
    flows[line_id.index()] = l.from == b ? out : -out;
    subtree[parent.index()] += out;
  }
  return subtree[order.front().index()];
}

std::vector<double> tree_flows(const Network& network, const LineStatusMap& status, std::span<const double> injections) {
  if (injections.size() != network.bus_count()) throw ValidationError("injection vector size mismatch");
  RadialForest forest;
  forest.build(network, status);
  std::vector<double> flows(network.line_count(), 0.0);
  std::vector<double> subtree(network.bus_count(), 0.0);
  for (std::size_t k = 0; k < forest.islands().island_count(); ++k) {
    const double residual = forest.island_flows(network, k, injections, flows, subtree);
    if (std::abs(residual) > 1e-6) {
      throw TopologyError("island " + std::to_string(k) + " injections do not balance (residual " +
                          std::to_string(residual) + " kW)");
    }
  }
  return flows;
}

}  // namespace gridrestore
