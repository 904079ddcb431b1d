#pragma once

#include <initializer_list>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>

#include "tdm/error.hpp"
#include "tdm/node_id.hpp"

namespace tdm {

/// Ordered pair (from, to): `from` sends its payload to `to` in the slot.
using NodePair = std::pair<NodeId, NodeId>;

class EndpointOutsideUniverse : public Error {
 public:
  explicit EndpointOutsideUniverse(NodePair pair);
  NodePair pair() const { return pair_; }

 private:
  NodePair pair_;
};

class UniverseMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidExchangeRelation : public Error {
 public:
  using Error::Error;
};

class RelationParseError : public Error {
 public:
  using Error::Error;
};

/// A finite relation on a set of participating nodes (the universe).
///
/// Values are immutable once built. Isolated participants are representable
/// because the universe is stored explicitly instead of being inferred from
/// the pairs.
class ExchangeRelation {
 public:
  ExchangeRelation() = default;

  const std::set<NodeId>& universe() const noexcept { return universe_; }
  const std::set<NodePair>& pairs() const noexcept { return pairs_; }

  bool contains(NodeId from, NodeId to) const { return pairs_.contains({from, to}); }
  std::size_t size() const noexcept { return pairs_.size(); }
  bool empty() const noexcept { return pairs_.empty(); }

  friend bool operator==(const ExchangeRelation&, const ExchangeRelation&) = default;

 private:
  friend ExchangeRelation build_relation(std::set<NodeId> universe, std::span<const NodePair> pairs);

  ExchangeRelation(std::set<NodeId> universe, std::set<NodePair> pairs)
      : universe_(std::move(universe)), pairs_(std::move(pairs)) {}

  std::set<NodeId> universe_;
  std::set<NodePair> pairs_;
};

/// Builds a relation, dropping duplicate pairs. Throws EndpointOutsideUniverse
/// if any pair names a node that is not in `universe`.
ExchangeRelation build_relation(std::set<NodeId> universe, std::span<const NodePair> pairs);

inline ExchangeRelation build_relation(std::set<NodeId> universe, std::initializer_list<NodePair> pairs) {
  return build_relation(std::move(universe), std::span<const NodePair>(pairs.begin(), pairs.size()));
}

ExchangeRelation inverse(const ExchangeRelation& r);

/// (x, y) is in compose(r, s) iff some z has (x, z) in r and (z, y) in s.
/// The left operand is applied first, so data flows from r's senders through
/// s's receivers. Throws UniverseMismatch unless both share a universe.
ExchangeRelation compose(const ExchangeRelation& r, const ExchangeRelation& s);

ExchangeRelation union_of(const ExchangeRelation& r, const ExchangeRelation& s);

ExchangeRelation symmetric_closure(const ExchangeRelation& r);

bool is_transitive(const ExchangeRelation& r);

struct ValidityReport {
  enum class Violation { none, reflexive_pair, missing_reverse };

  bool valid = true;
  Violation violation = Violation::none;
  std::optional<NodePair> offending;
  std::string diagnostic;

  explicit operator bool() const noexcept { return valid; }
};

/// A relation is a valid per-slot exchange pattern iff it is irreflexive and
/// symmetric. Never throws; the report names the first offending pair.
ValidityReport is_valid_exchange(const ExchangeRelation& r);

/// Undirected view of a valid exchange relation. Edges are stored with
/// first < second.
struct ExchangeGraph {
  std::set<NodeId> vertices;
  std::set<NodePair> edges;

  friend bool operator==(const ExchangeGraph&, const ExchangeGraph&) = default;
};

ExchangeGraph to_graph(const ExchangeRelation& r);

/// Expands every undirected edge back into both ordered pairs.
ExchangeRelation to_relation(const ExchangeGraph& g);

/// Nodes `x` exchanges with, ascending by id.
PeerList peers_of(const ExchangeRelation& r, NodeId x);

/// Text form: a "universe: 1 2 3" header followed by one "from,to" line per
/// ordered pair.
std::string format_relation(const ExchangeRelation& r);
ExchangeRelation parse_relation(std::string_view text);

}  // namespace tdm
