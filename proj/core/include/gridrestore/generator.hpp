#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "gridrestore/instance.hpp"

namespace gridrestore {

struct GeneratorSpec {
  std::size_t buses{123};
  std::size_t faults{24};
  std::size_t crews{4};
  std::size_t megs{2};
  std::size_t depots{2};
  std::size_t staged_faults{3};  // faults discovered after the start (periods 4, 6, 12, ...)
  std::uint64_t seed{1};
  /// Known fixed repair times, no forecast noise and no staged discoveries.
  bool deterministic{false};
};

/// Synthetic radial feeder rooted at one substation. Faults sit on tree lines,
/// so with every fault and tie switch open the feeder splits into faults + 1
/// islands. Shed costs are $5..20/kWh and repair times 2..8 periods of 15 min.
/// Throws ValidationError on inconsistent sizes.
[[nodiscard]] Instance generate_instance(const GeneratorSpec& spec);

/// Six-bus chain with two known faults, one crew and one 40 kW MEG.
[[nodiscard]] Instance tiny6_instance();

/// `tiny6` or `medium123` (the default generator spec). Throws ValidationError otherwise.
[[nodiscard]] Instance builtin_instance(std::string_view name);
[[nodiscard]] bool is_builtin_instance(std::string_view name);

}  // namespace gridrestore
