#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>

namespace gridrestore {

/// Dense index into one of the network's component tables.
///
/// Ids are assigned in declaration order when an instance is loaded, so
/// "lowest id" tie-breaks everywhere in the engine mean "declared first".
template <class Tag>
struct Id {
  std::uint32_t value{0};

  constexpr Id() = default;
  constexpr explicit Id(std::uint32_t v) : value(v) {}
  constexpr explicit Id(std::size_t v) : value(static_cast<std::uint32_t>(v)) {}
  constexpr explicit Id(int v) : value(static_cast<std::uint32_t>(v)) {}

  [[nodiscard]] constexpr std::size_t index() const { return value; }

  friend constexpr auto operator<=>(Id, Id) = default;
};

using BusId = Id<struct BusTag>;
using LineId = Id<struct LineTag>;
using SourceId = Id<struct SourceTag>;
using StorageId = Id<struct StorageTag>;
using DepotId = Id<struct DepotTag>;
using CrewId = Id<struct CrewTag>;
using MegId = Id<struct MegTag>;

}  // namespace gridrestore

template <class Tag>
struct std::hash<gridrestore::Id<Tag>> {
  std::size_t operator()(gridrestore::Id<Tag> id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};
