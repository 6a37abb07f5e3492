#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gridrestore/network.hpp"

namespace gridrestore {

/// Open/closed status z for every line of a network.
class LineStatusMap {
 public:
  LineStatusMap() = default;
  explicit LineStatusMap(std::size_t line_count, bool closed = true) : closed_(line_count, closed ? 1 : 0) {}

  [[nodiscard]] bool closed(LineId id) const { return closed_[id.index()] != 0; }
  void set(LineId id, bool closed) { closed_[id.index()] = closed ? 1 : 0; }
  void open(LineId id) { set(id, false); }
  void close(LineId id) { set(id, true); }
  [[nodiscard]] std::size_t size() const { return closed_.size(); }
  [[nodiscard]] std::size_t closed_count() const;

  friend bool operator==(const LineStatusMap&, const LineStatusMap&) = default;

 private:
  std::vector<std::uint8_t> closed_;
};

/// Connected components of the closed-line subgraph. Islands are numbered in
/// order of their lowest bus id; members of each island are in increasing id order.
class IslandAssignment {
 public:
  [[nodiscard]] std::size_t island_count() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  [[nodiscard]] std::uint32_t island_of(BusId bus) const { return island_of_[bus.index()]; }
  [[nodiscard]] std::span<const BusId> members(std::size_t island) const {
    return {members_.data() + offsets_[island], members_.data() + offsets_[island + 1]};
  }
  [[nodiscard]] std::span<const std::uint32_t> island_ids() const { return island_of_; }

 private:
  friend void partition_islands(const Network&, const LineStatusMap&, IslandAssignment&);
  std::vector<std::uint32_t> island_of_;
  std::vector<std::uint32_t> offsets_;
  std::vector<BusId> members_;
  std::vector<std::uint32_t> scratch_;
};

/// Reuses the capacity of `out`; the hot path of the load-loss estimator calls this every period.
void partition_islands(const Network& network, const LineStatusMap& status, IslandAssignment& out);
[[nodiscard]] IslandAssignment partition_islands(const Network& network, const LineStatusMap& status);

/// True iff every island of the closed-line subgraph is a tree.
[[nodiscard]] bool is_radial(const Network& network, const LineStatusMap& status);

/// Deterministic spanning forest of the closed subgraph: lines are scanned in
/// id order and a line stays closed only if it joins two different components.
[[nodiscard]] LineStatusMap spanning_forest(const Network& network, const LineStatusMap& status);

/// Lines forming the cycle closed by the lowest-id line whose endpoints were
/// already connected, or empty when the status is radial.
[[nodiscard]] std::vector<LineId> find_cycle(const Network& network, const LineStatusMap& status);

/// Load-loss value of a (possibly still meshed) line status.
using LossEvaluator = std::function<double(const LineStatusMap&)>;

/// Opens switchable lines until the status is radial. Each loop is broken by
/// the switch whose opening gives the smallest evaluated loss; ties go to the
/// lowest line id. Throws TopologyError if a loop has no closed switchable line.
[[nodiscard]] LineStatusMap enforce_radiality(const Network& network, LineStatusMap status,
                                              const LossEvaluator& evaluate_loss);

/// Active-power flow on each line (positive in the from->to direction) for a
/// radial status and per-bus net injections. Open lines carry zero. Throws
/// TopologyError if the status has a loop or an island's injections do not
/// sum to zero within 1e-6 kW.
[[nodiscard]] std::vector<double> tree_flows(const Network& network, const LineStatusMap& status,
                                             std::span<const double> injections);

/// Rooted view of a radial status used for repeated flow evaluation.
class RadialForest {
 public:
  /// Throws TopologyError if `status` is not radial.
  void build(const Network& network, const LineStatusMap& status);

  [[nodiscard]] const IslandAssignment& islands() const { return islands_; }

  /// Buses of `island` in BFS order from its root (lowest id).
  [[nodiscard]] std::span<const BusId> order(std::size_t island) const { return islands_order(island); }

  /// Line to the parent bus; only meaningful for non-root buses.
  [[nodiscard]] LineId parent_line(BusId bus) const { return parent_line_[bus.index()]; }
  [[nodiscard]] bool is_root(BusId bus) const { return is_root_[bus.index()] != 0; }

  /// Flows within one island; `subtree` is scratch sized to the bus count.
  /// Returns the root residual (the island's injection imbalance).
  double island_flows(const Network& network, std::size_t island, std::span<const double> injections,
                      std::span<double> flows, std::span<double> subtree) const;

 private:
  [[nodiscard]] std::span<const BusId> islands_order(std::size_t island) const {
    return {order_.data() + offsets_[island], order_.data() + offsets_[island + 1]};
  }
  IslandAssignment islands_;
  std::vector<BusId> order_;
  std::vector<std::uint32_t> offsets_;
  std::vector<LineId> parent_line_;
  std::vector<std::uint8_t> is_root_;
  std::vector<std::uint8_t> visited_;
};

}  // namespace gridrestore
