#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gridrestore/dispatch.hpp"
#include "gridrestore/graph.hpp"
#include "gridrestore/network.hpp"
#include "gridrestore/state.hpp"

namespace gridrestore {

struct LossSettings {
  double delta_t{0.25};  // hours per period
  bool lv_weighted{true};  // LV weights unserved kW by shed cost; false counts raw kW
  std::string dispatch{"approx"};
};

/// A parked MEG contributing supply at a bus.
struct MegInjection {
  BusId bus;
  double max_active{0.0};
};

/// A load competing for island supply.
struct LoadDemand {
  BusId bus;
  double demand{0.0};
  double shed_cost{0.0};
};

/// Serves loads in decreasing shed cost (ties: lowest bus id) until `supply`
/// runs out; the marginal load may be served partially. Returns kW per load in
/// the order given.
[[nodiscard]] std::vector<double> allocate_island(double supply, std::span<const LoadDemand> loads);

/// Non-storage supply and demand of one island.
struct IslandBalance {
  double supply{0.0};
  double demand{0.0};
};

/// Storage rule: in a surplus island storage charges from the surplus, in a
/// deficit island it releases its available energy spread over the island's
/// estimated outage duration. Returns signed kW per storage (+discharge, -charge).
/// `storage_island` maps each storage to an index into `islands` and `outage_periods`.
[[nodiscard]] std::vector<double> storage_base_dispatch(std::span<const IslandBalance> islands,
                                                        std::span<const StorageUnit> units,
                                                        std::span<const std::uint32_t> storage_island,
                                                        std::span<const StorageState> states,
                                                        std::span<const double> outage_periods, double delta_t);

/// Island-based load-loss estimator with reusable scratch buffers. One
/// instance per thread; the referenced network must outlive it.
class LoadLossEstimator {
 public:
  LoadLossEstimator(const Network& network, LossSettings settings);

  [[nodiscard]] const Network& network() const { return *network_; }
  [[nodiscard]] const LossSettings& settings() const { return settings_; }

  /// Unsatisfied-load value per period: faulted lines open, every other line
  /// closed, loops broken by the switch rule, supply pooled per island and
  /// allocated by priority under line capacities.
  [[nodiscard]] double estimate_lv(std::span<const LineId> faults, std::span<const MegInjection> megs,
                                   const PeriodInputs& inputs, std::span<const double> storage_plan);

  /// Fixes a fault set, MEGs, inputs and storage plan for lv_repairing and
  /// returns a token identifying them.
  std::uint64_t prepare_repairs(std::span<const LineId> faults, std::span<const MegInjection> megs,
                                const PeriodInputs& inputs, std::span<const double> storage_plan);
  [[nodiscard]] std::uint64_t repairs_token() const { return repairs_token_; }

  /// estimate_lv for the prepared faults minus `repaired`, found by merging
  /// the islands the repaired lines join instead of partitioning again.
  [[nodiscard]] double lv_repairing(std::span<const LineId> repaired);

  /// Same pipeline with every quantity of the resulting dispatch reported.
  [[nodiscard]] DispatchResult dispatch(std::span<const LineId> faults, std::span<const MegInjection> megs,
                                        const PeriodInputs& inputs, std::span<const double> storage_plan);

  /// Storage rule applied to a state: islands of the radial status for the
  /// state's active faults, outage duration of each island estimated from the
  /// remaining repair time of the faulted lines between its most valuable
  /// load and the nearest substation.
  [[nodiscard]] std::vector<double> storage_plan(const SystemState& state, std::span<const MegInjection> megs);

  /// Full dispatch of the state's current period: storage rule, switch rule,
  /// supplying MEGs at their parked buses.
  [[nodiscard]] DispatchResult dispatch_state(const SystemState& state);

  /// Load-loss value of an already radial line status.
  [[nodiscard]] double lv_on_status(const LineStatusMap& status, std::span<const MegInjection> megs,
                                    const PeriodInputs& inputs, std::span<const double> storage_plan);

  /// Line status used for the fault set: faulted lines open, loops broken.
  [[nodiscard]] LineStatusMap radial_status(std::span<const LineId> faults, std::span<const MegInjection> megs,
                                            const PeriodInputs& inputs);

  /// Periods until the loads around `bus` can be fed from a substation, given
  /// the state's faults; at least 1.
  [[nodiscard]] double outage_periods(const SystemState& state, BusId bus) const;

 private:
  struct Outcome {
    double lv{0.0};
    double cost{0.0};
    bool bound{false};  // probe stopped early: some line capacity binds
  };

  void open_faults(std::span<const LineId> faults);
  void make_radial(std::span<const MegInjection> megs, const PeriodInputs& inputs);
  std::vector<double> plan_for_status(const SystemState& state, std::span<const MegInjection> megs);
  Outcome allocate(const LineStatusMap& status, std::span<const MegInjection> megs, const PeriodInputs& inputs,
                   std::span<const double> storage_plan, DispatchResult* detail, bool probe = false);
  void allocate_with_capacity(std::size_t island, const LineStatusMap& status, std::span<const MegInjection> megs,
                              const PeriodInputs& inputs, std::span<const double> storage_plan);
  bool island_feasible(std::size_t island, std::span<const MegInjection> megs, const PeriodInputs& inputs,
                       std::span<const double> storage_plan);
  void merit_fill(std::span<const MegInjection> megs, const PeriodInputs& inputs, std::span<const double> storage_plan,
                  std::size_t only_island);
  bool has_loop(const LineStatusMap& status);
  void partition(const LineStatusMap& status);
  void build_island_cache(const PeriodInputs& inputs, std::span<const double> storage_plan);
  double island_lv(std::size_t island, std::span<const MegInjection> megs, const PeriodInputs& inputs,
                   std::span<const double> storage_plan);
  bool capacity_may_bind(std::span<const MegInjection> megs, const PeriodInputs& inputs);
  void group_pass(std::span<const std::uint8_t> active);

  const Network* network_;
  LossSettings settings_;
  bool network_has_loops_{false};
  std::vector<LineId> substation_path_;  // line towards the nearest substation per bus
  std::vector<BusId> substation_next_;

  LineStatusMap status_;
  IslandAssignment islands_;
  LineStatusMap partitioned_;  // status islands_ and forest_ were computed for
  bool partition_valid_{false};
  RadialForest forest_;
  bool forest_ready_{false};
  std::vector<double> supply_;
  std::vector<double> remaining_;
  std::vector<double> demand_total_;
  std::vector<double> served_;
  std::vector<double> charge_;
  std::vector<double> min_capacity_;
  std::vector<double> need_;
  std::vector<double> source_out_;
  std::vector<double> meg_out_;
  std::vector<double> storage_out_;
  std::vector<double> injections_;
  std::vector<double> flows_;
  std::vector<double> subtree_;
  std::vector<std::uint32_t> dsu_;

  // Per-island load loss for the cached partition, inputs and storage plan,
  // used to score MEG placements one island at a time.
  bool island_cache_valid_{false};
  bool islands_unbound_{false};  // no line capacity can bind whatever the MEGs add
  PeriodInputs cached_inputs_;
  std::vector<double> cached_plan_;
  std::vector<double> island_sources_;
  std::vector<double> island_free_lv_;
  std::vector<std::uint32_t> by_priority_offsets_;
  std::vector<BusId> by_priority_;
  std::vector<std::uint8_t> touched_;
  struct IslandMemo {
    std::vector<double> megs;  // capacities of the MEGs inside, in injection order
    double lv{0.0};
  };
  std::vector<std::vector<IslandMemo>> island_memo_;
  std::vector<double> memo_key_;

  // Islands with every prepared fault open, for lv_repairing. Groups of
  // islands joined by repaired lines are keyed by their lowest island.
  struct Repairs {
    std::vector<LineId> faults;
    std::vector<MegInjection> megs;
    PeriodInputs inputs;
    std::vector<double> plan;
    IslandAssignment islands;
    std::vector<double> lv;  // per island, before the period length factor
    std::vector<double> min_capacity;
    std::vector<std::uint8_t> bound;
    std::vector<std::uint32_t> group;
    std::vector<std::uint8_t> active;
    std::vector<double> supply;
    std::vector<double> left;
    std::vector<double> group_lv;
    std::vector<double> group_capacity;
    std::vector<LineId> remaining;
  } repairs_;
  std::uint64_t repairs_token_{0};
};

/// One-shot convenience wrapper around LoadLossEstimator::estimate_lv.
[[nodiscard]] double estimate_lv(const Network& network, std::span<const LineId> faults,
                                 std::span<const MegInjection> megs, const PeriodInputs& inputs,
                                 std::span<const double> storage_plan, const LossSettings& settings);

/// Parked, supplying MEGs of a state.
[[nodiscard]] std::vector<MegInjection> supplying_megs(const SystemState& state);

/// Dispatch for the current period of `state` (targets already applied) and
/// its cost. Uses the approximate estimator unless settings.dispatch names a
/// registered exact dispatcher.
[[nodiscard]] DispatchResult period_cost(const Network& network, const SystemState& state,
                                         const LossSettings& settings);

/// Exact-dispatch plug-in: must satisfy every DispatchResult invariant and be reentrant.
using DispatchFunction = std::function<DispatchResult(const Network&, const SystemState&, const LossSettings&)>;

/// Makes `fn` available as dispatch mode "exact:<name>".
void register_exact_dispatch(const std::string& name, DispatchFunction fn);
[[nodiscard]] bool has_exact_dispatch(const std::string& name);

/// Validates a dispatch mode string; throws ValidationError for unknown modes.
void check_dispatch_mode(const std::string& mode);

}  // namespace gridrestore
