#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gridrestore/instance.hpp"
#include "gridrestore/rollout.hpp"

namespace gridrestore {

/// Resilience indices of one run.
struct Metrics {
  double el{0.0};    // $: shed-cost weighted energy not served
  double tens{0.0};  // kWh: total energy not served
  double waod{0.0};  // h: outage duration per bus averaged with shed-cost weights
};

/// Shortfall below this many kW counts as served when measuring outage duration.
inline constexpr double kOutageThreshold = 1e-9;

[[nodiscard]] Metrics compute_metrics(const RunRecord& record, const Network& network, double delta_t,
                                      WaodMode mode = WaodMode::any_shortfall);

/// Writes `period,bus_id,demand_kw,served_kw,shed_cost,island_id`, one row per bus and period.
void write_periods_csv(std::ostream& out, const RunRecord& record, const Network& network);
/// Writes `period,unit_id,unit_kind,event,target`.
void write_actions_csv(std::ostream& out, const RunRecord& record);

/// Reads a periods file back into per-period demand and served vectors in
/// network bus order. Throws ParseError on a malformed file.
[[nodiscard]] RunRecord read_periods_csv(std::istream& in, const Network& network);

struct SeedResult {
  std::uint64_t seed{0};
  Metrics metrics;
  RunRecord record;
};

/// Human-readable summary of a sweep: per-seed indices, means and decision wall clock.
void write_summary(std::ostream& out, const std::string& instance_name, PolicyKind policy,
                   const std::vector<SeedResult>& runs);

}  // namespace gridrestore
