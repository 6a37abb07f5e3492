#pragma once

#include <cstdint>
#include <vector>

#include "gridrestore/graph.hpp"

namespace gridrestore {

/// Single-period network dispatch and its shedding cost.
struct DispatchResult {
  std::vector<double> served;             // kW per bus
  std::vector<double> demand;             // kW per bus, the demand the dispatch was asked to meet
  std::vector<double> source_output;      // kW per source
  std::vector<double> meg_output;         // kW per MEG
  std::vector<double> storage_discharge;  // kW per storage, >= 0
  std::vector<double> storage_charge;     // kW per storage, >= 0
  LineStatusMap line_status;
  std::vector<std::uint32_t> island_of;  // island id per bus under line_status
  double cost{0.0};                      // $ shed cost over the period
};

}  // namespace gridrestore
