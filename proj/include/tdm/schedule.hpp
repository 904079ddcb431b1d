#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tdm/error.hpp"
#include "tdm/node_id.hpp"
#include "tdm/relation.hpp"

namespace tdm {

class NodeCountTooSmall : public Error {
 public:
  using Error::Error;
};

class SlotOutOfRange : public Error {
 public:
  using Error::Error;
};

class ScheduleParseError : public Error {
 public:
  using Error::Error;
};

/// Who talks to whom in one time slot. A node without an entry skips the slot.
struct SlotPlan {
  std::uint64_t slot = 0;
  std::map<NodeId, PeerList> peer_lists;

  bool skips(NodeId node) const { return !peer_lists.contains(node); }
  const PeerList* peers(NodeId node) const {
    auto it = peer_lists.find(node);
    return it == peer_lists.end() ? nullptr : &it->second;
  }

  friend bool operator==(const SlotPlan&, const SlotPlan&) = default;
};

/// Fully materialized multi-slot schedule for nodes 1..node_count.
struct SlotSchedule {
  std::uint32_t node_count = 0;
  std::vector<SlotPlan> slots;

  friend bool operator==(const SlotSchedule&, const SlotSchedule&) = default;
};

/// Single slot in which every node exchanges with all others, ascending.
SlotSchedule clique_schedule(std::uint32_t n);

/// Circle-method round-robin tournament: every unordered pair meets in exactly
/// one slot. Even n gives n-1 perfect matchings. Odd n gives n slots, each
/// with one node on a bye; the bye node skips that slot.
SlotSchedule round_robin_schedule(std::uint32_t n);

struct ScheduleViolation {
  enum class Kind {
    node_out_of_range,
    slot_index_gap,
    self_in_peer_list,
    duplicate_peer,
    empty_peer_list,
    asymmetric_pair,
    peer_skips_slot,
  };

  Kind kind;
  std::uint64_t slot = 0;
  std::uint32_t from = 0;
  std::uint32_t to = 0;
  std::string message;
};

struct ScheduleReport {
  std::vector<ScheduleViolation> violations;

  bool ok() const noexcept { return violations.empty(); }
  explicit operator bool() const noexcept { return ok(); }
};

/// Collects every violation of the per-slot rules: peer lists must be
/// irreflexive, duplicate-free, non-empty and symmetric, and no node may be
/// scheduled to send to a node that skips the slot.
ScheduleReport validate_schedule(const SlotSchedule& s);

/// Relation induced by slot `t`; its universe is the slot's non-skipping nodes.
ExchangeRelation slot_relation(const SlotSchedule& s, std::size_t t);

/// Text form:
///   n=<count> slots=<count>
///   <slot>:<node>:<peer>,<peer>,...
/// Skipping nodes have no line.
std::string format_schedule(const SlotSchedule& s);
SlotSchedule parse_schedule(std::string_view text);

}  // namespace tdm
