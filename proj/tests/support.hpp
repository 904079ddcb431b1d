#pragma once

// Generators shared by the unit and acceptance suites.

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "tdm/relation.hpp"
#include "tdm/schedule.hpp"

namespace tdm::testing {

inline const NodeId a{1}, b{2}, c{3};

inline std::set<NodeId> universe_of(std::uint32_t n) {
  std::set<NodeId> u;
  for (std::uint32_t i = 1; i <= n; ++i) u.insert(NodeId(i));
  return u;
}

/// Arbitrary relation on 1..n, each ordered pair (self-loops included) kept
/// with probability `density`.
inline ExchangeRelation random_relation(std::mt19937_64& rng, std::uint32_t n, double density = 0.3) {
  std::bernoulli_distribution keep(density);
  std::vector<NodePair> pairs;
  for (std::uint32_t i = 1; i <= n; ++i) {
    for (std::uint32_t j = 1; j <= n; ++j) {
      if (keep(rng)) pairs.emplace_back(NodeId(i), NodeId(j));
    }
  }
  return build_relation(universe_of(n), pairs);
}

/// Symmetric, irreflexive relation on 1..n built edge by edge.
inline ExchangeRelation random_valid_relation(std::mt19937_64& rng, std::uint32_t n, double density = 0.4) {
  std::bernoulli_distribution keep(density);
  std::vector<NodePair> pairs;
  for (std::uint32_t i = 1; i <= n; ++i) {
    for (std::uint32_t j = i + 1; j <= n; ++j) {
      if (keep(rng)) {
        pairs.emplace_back(NodeId(i), NodeId(j));
        pairs.emplace_back(NodeId(j), NodeId(i));
      }
    }
  }
  return build_relation(universe_of(n), pairs);
}

/// Valid schedule over 1..n: each slot is a random undirected graph, nodes
/// without edges skip, and every peer list is in random order.
inline SlotSchedule random_schedule(std::mt19937_64& rng, std::uint32_t n, std::uint32_t slots, double density = 0.5) {
  std::bernoulli_distribution keep(density);
  SlotSchedule s{n, {}};
  for (std::uint32_t t = 0; t < slots; ++t) {
    SlotPlan plan;
    plan.slot = t;
    for (std::uint32_t i = 1; i <= n; ++i) {
      for (std::uint32_t j = i + 1; j <= n; ++j) {
        if (keep(rng)) {
          plan.peer_lists[NodeId(i)].push_back(NodeId(j));
          plan.peer_lists[NodeId(j)].push_back(NodeId(i));
        }
      }
    }
    for (auto& [owner, peers] : plan.peer_lists) std::shuffle(peers.begin(), peers.end(), rng);
    s.slots.push_back(std::move(plan));
  }
  return s;
}

}  // namespace tdm::testing
