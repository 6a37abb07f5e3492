#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridrestore/network.hpp"

namespace gridrestore {

/// One entry of the instance's fault list. Faults with discovery_period 0 are
/// known at the start; later ones are the scripted ground-truth discoveries.
struct FaultSpec {
  LineId line;
  std::optional<int> repair_time;               // ground truth in periods; drawn per seed when absent
  std::optional<double> estimated_repair_time;  // belief before the crew arrives; prior mean when absent
  int discovery_period{0};
  bool known{false};  // repair time is known as soon as the fault is discovered
};

struct CrewSpec {
  std::string id;
  DepotId depot;
};

struct MegSpec {
  std::string id;
  DepotId depot;
  double max_active{0.0};    // kW
  double max_reactive{0.0};  // kvar
};

struct NewFaultPrior {
  LineId line;
  double probability{0.0};
  int window_begin{0};  // inclusive discovery-period range
  int window_end{0};
};

/// Belief about the uncertain quantities used to sample rollout scenarios.
struct UncertaintyPriors {
  double repair_shape{2.0};
  double repair_scale{5.641895835477563};  // mean of 5 periods at shape 2
  double pv_error_std{0.0};                // fraction of forecast
  double load_error_halfwidth{0.0};        // fraction of forecast
  std::vector<NewFaultPrior> new_faults;

  [[nodiscard]] double repair_time_mean() const;
  /// Throws ValidationError on out-of-range parameters.
  void validate() const;
};

/// Range for ground-truth repair times drawn when a fault has no fixed value.
struct GroundTruthSpec {
  int repair_time_min{2};
  int repair_time_max{8};
};

enum class WaodMode { any_shortfall, full_outage };

struct EngineSettings {
  double delta_t{0.25};  // hours per period
  int horizon{96};       // periods; runs and rollouts stop before this period
  std::string dispatch{"approx"};
  bool lv_weighted{true};
  WaodMode waod_mode{WaodMode::any_shortfall};
};

/// Per-period multipliers; the last value is held beyond the end of a profile.
struct Profiles {
  std::map<std::string, std::vector<double>> load;
  std::map<std::string, std::vector<double>> pv;
};

struct Instance {
  std::string name;
  Network network;
  std::vector<FaultSpec> faults;
  std::vector<CrewSpec> crews;
  std::vector<MegSpec> megs;
  Profiles profiles;
  UncertaintyPriors priors;
  GroundTruthSpec ground_truth;
  EngineSettings settings;

  /// Forecast demand per bus and source capacity per source for period t.
  [[nodiscard]] PeriodInputs forecast(int period) const;
  void forecast(int period, PeriodInputs& out) const;
};

/// Parses and validates an instance document. Throws ParseError for malformed
/// JSON or unknown/mistyped fields and ValidationError for model violations.
[[nodiscard]] Instance load_instance(std::string_view document);
[[nodiscard]] Instance load_instance_file(const std::string& path);
[[nodiscard]] Network load_network(std::string_view document);

/// Serializes an instance back to a document accepted by load_instance.
[[nodiscard]] std::string dump_instance(const Instance& instance);

[[nodiscard]] std::string_view to_string(WaodMode mode);
[[nodiscard]] std::string_view to_string(SourceKind kind);

}  // namespace gridrestore
