#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "tdm/error.hpp"

namespace tdm {

/// Positive node identifier. Nodes of an n-node system are numbered 1..n.
class NodeId {
 public:
  constexpr explicit NodeId(std::uint32_t value) : value_(value) {
    if (value == 0) throw InvalidNodeId("node id must be >= 1");
  }

  constexpr std::uint32_t value() const noexcept { return value_; }

  friend constexpr auto operator<=>(NodeId, NodeId) = default;

  friend std::ostream& operator<<(std::ostream& os, NodeId id) { return os << id.value_; }

 private:
  std::uint32_t value_;
};

inline std::string to_string(NodeId id) { return std::to_string(id.value()); }

using PeerList = std::vector<NodeId>;

/// Opaque payload bytes. The engine never inspects them.
using Bytes = std::vector<std::uint8_t>;

inline Bytes to_bytes(std::string_view text) { return Bytes(text.begin(), text.end()); }

}  // namespace tdm

template <>
struct std::hash<tdm::NodeId> {
  std::size_t operator()(tdm::NodeId id) const noexcept { return std::hash<std::uint32_t>{}(id.value()); }
};
