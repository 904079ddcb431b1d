#include "tdm/schedule.hpp"

#include <algorithm>
#include <charconv>
#include <optional>
#include <set>
#include <sstream>

namespace tdm {

namespace {

void require_at_least_two(std::uint32_t n) {
  if (n < 2) throw NodeCountTooSmall("schedule needs at least 2 nodes, got " + std::to_string(n));
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view token, std::size_t line_no) {
  token = trim(token);
  T value{};
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (token.empty() || ec != std::errc{} || ptr != end)
    throw ScheduleParseError("line " + std::to_string(line_no) + ": bad number '" + std::string(token) + "'");
  return value;
}

NodeId parse_node(std::string_view token, std::size_t line_no) {
  const auto value = parse_number<std::uint32_t>(token, line_no);
  if (value == 0) throw ScheduleParseError("line " + std::to_string(line_no) + ": node id 0");
  return NodeId(value);
}

std::string pair_text(std::uint32_t a, std::uint32_t b) {
  return "(" + std::to_string(a) + "," + std::to_string(b) + ")";
}

}  // namespace

SlotSchedule clique_schedule(std::uint32_t n) {
  require_at_least_two(n);
  SlotPlan plan;
  for (std::uint32_t i = 1; i <= n; ++i) {
    PeerList peers;
    peers.reserve(n - 1);
    for (std::uint32_t j = 1; j <= n; ++j) {
      if (j != i) peers.emplace_back(j);
    }
    plan.peer_lists.emplace(NodeId(i), std::move(peers));
  }
  return SlotSchedule{n, {std::move(plan)}};
}

SlotSchedule round_robin_schedule(std::uint32_t n) {
  require_at_least_two(n);
  // 0 stands for the bye seat when n is odd.
  const std::uint32_t seats = n % 2 == 0 ? n : n + 1;
  std::vector<std::uint32_t> ring(seats);
  for (std::uint32_t i = 0; i < n; ++i) ring[i] = i + 1;
  if (seats != n) ring[n] = 0;

  SlotSchedule schedule{n, {}};
  schedule.slots.reserve(seats - 1);
  for (std::uint32_t round = 0; round + 1 < seats; ++round) {
    SlotPlan plan;
    plan.slot = round;
    for (std::uint32_t i = 0; i < seats / 2; ++i) {
      const auto a = ring[i];
      const auto b = ring[seats - 1 - i];
      if (a == 0 || b == 0) continue;
      plan.peer_lists.emplace(NodeId(a), PeerList{NodeId(b)});
      plan.peer_lists.emplace(NodeId(b), PeerList{NodeId(a)});
    }
    schedule.slots.push_back(std::move(plan));
    // seat 0 stays fixed, everyone else rotates one step clockwise
    std::rotate(ring.begin() + 1, ring.end() - 1, ring.end());
  }
  return schedule;
}

ScheduleReport validate_schedule(const SlotSchedule& s) {
  using Kind = ScheduleViolation::Kind;
  ScheduleReport report;
  auto add = [&](Kind kind, std::uint64_t slot, std::uint32_t from, std::uint32_t to, std::string msg) {
    report.violations.push_back({kind, slot, from, to, "slot " + std::to_string(slot) + ": " + std::move(msg)});
  };

  for (std::size_t index = 0; index < s.slots.size(); ++index) {
    const auto& plan = s.slots[index];
    if (plan.slot != index)
      add(Kind::slot_index_gap, plan.slot, 0, 0,
          "expected slot index " + std::to_string(index) + ", found " + std::to_string(plan.slot));

    for (const auto& [owner, peers] : plan.peer_lists) {
      const auto o = owner.value();
      if (o > s.node_count) add(Kind::node_out_of_range, plan.slot, o, 0, "node " + std::to_string(o) + " out of range");
      if (peers.empty()) add(Kind::empty_peer_list, plan.slot, o, 0, "node " + std::to_string(o) + " has an empty peer list");

      std::set<NodeId> seen;
      for (auto peer : peers) {
        const auto p = peer.value();
        if (p > s.node_count) {
          add(Kind::node_out_of_range, plan.slot, o, p, "peer " + std::to_string(p) + " out of range");
          continue;
        }
        if (peer == owner) {
          add(Kind::self_in_peer_list, plan.slot, o, p, "reflexive pair " + pair_text(o, p));
          continue;
        }
        if (!seen.insert(peer).second) {
          add(Kind::duplicate_peer, plan.slot, o, p, "duplicate pair " + pair_text(o, p));
          continue;
        }
        const auto* reverse = plan.peers(peer);
        if (reverse == nullptr) {
          add(Kind::peer_skips_slot, plan.slot, o, p,
              "node " + std::to_string(o) + " sends to skipping node " + std::to_string(p));
        } else if (std::find(reverse->begin(), reverse->end(), owner) == reverse->end()) {
          add(Kind::asymmetric_pair, plan.slot, o, p, "asymmetric pair " + pair_text(o, p));
        }
      }
    }
  }
  return report;
}

ExchangeRelation slot_relation(const SlotSchedule& s, std::size_t t) {
  if (t >= s.slots.size())
    throw SlotOutOfRange("slot " + std::to_string(t) + " out of range (" + std::to_string(s.slots.size()) + " slots)");
  const auto& plan = s.slots[t];
  std::set<NodeId> universe;
  std::vector<NodePair> pairs;
  for (const auto& [owner, peers] : plan.peer_lists) {
    universe.insert(owner);
    for (auto peer : peers) pairs.emplace_back(owner, peer);
  }
  return build_relation(std::move(universe), pairs);
}

std::string format_schedule(const SlotSchedule& s) {
  std::ostringstream os;
  os << "n=" << s.node_count << " slots=" << s.slots.size() << '\n';
  for (const auto& plan : s.slots) {
    for (const auto& [owner, peers] : plan.peer_lists) {
      os << plan.slot << ':' << owner << ':';
      for (std::size_t i = 0; i < peers.size(); ++i) os << (i ? "," : "") << peers[i];
      os << '\n';
    }
  }
  return os.str();
}

SlotSchedule parse_schedule(std::string_view text) {
  SlotSchedule schedule;
  std::optional<std::uint64_t> declared_slots;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const auto line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;

    if (!declared_slots) {
      std::string n_field, slots_field;
      std::istringstream header{std::string(line)};
      header >> n_field >> slots_field;
      if (!n_field.starts_with("n=") || !slots_field.starts_with("slots="))
        throw ScheduleParseError("line " + std::to_string(line_no) + ": expected 'n=<count> slots=<count>'");
      schedule.node_count = parse_number<std::uint32_t>(std::string_view(n_field).substr(2), line_no);
      declared_slots = parse_number<std::uint64_t>(std::string_view(slots_field).substr(6), line_no);
      schedule.slots.resize(*declared_slots);
      for (std::size_t i = 0; i < schedule.slots.size(); ++i) schedule.slots[i].slot = i;
      continue;
    }

    const auto c1 = line.find(':');
    const auto c2 = c1 == std::string_view::npos ? c1 : line.find(':', c1 + 1);
    if (c2 == std::string_view::npos)
      throw ScheduleParseError("line " + std::to_string(line_no) + ": expected '<slot>:<node>:<peers>'");
    const auto slot = parse_number<std::uint64_t>(line.substr(0, c1), line_no);
    if (slot >= *declared_slots)
      throw ScheduleParseError("line " + std::to_string(line_no) + ": slot " + std::to_string(slot) +
                               " beyond declared slot count");
    const auto owner = parse_node(line.substr(c1 + 1, c2 - c1 - 1), line_no);

    PeerList peers;
    auto rest = trim(line.substr(c2 + 1));
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      peers.push_back(parse_node(rest.substr(0, comma), line_no));
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
    if (!schedule.slots[slot].peer_lists.emplace(owner, std::move(peers)).second)
      throw ScheduleParseError("line " + std::to_string(line_no) + ": node " + to_string(owner) +
                               " listed twice in slot " + std::to_string(slot));
  }
  if (!declared_slots) throw ScheduleParseError("missing 'n=<count> slots=<count>' header");
  return schedule;
}

}  // namespace tdm
