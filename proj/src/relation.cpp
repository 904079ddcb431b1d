#include "tdm/relation.hpp"

#include <charconv>
#include <sstream>
#include <vector>

namespace tdm {

namespace {

std::string pair_text(NodePair p) { return "(" + to_string(p.first) + "," + to_string(p.second) + ")"; }

void require_same_universe(const ExchangeRelation& r, const ExchangeRelation& s, const char* op) {
  if (r.universe() != s.universe()) throw UniverseMismatch(std::string(op) + ": relations have different universes");
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

NodeId parse_id(std::string_view token) {
  token = trim(token);
  std::uint32_t value = 0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc{} || ptr != end || value == 0)
    throw RelationParseError("invalid node id '" + std::string(token) + "'");
  return NodeId(value);
}

}  // namespace

EndpointOutsideUniverse::EndpointOutsideUniverse(NodePair pair)
    : Error("pair " + pair_text(pair) + " has an endpoint outside the universe"), pair_(pair) {}

ExchangeRelation build_relation(std::set<NodeId> universe, std::span<const NodePair> pairs) {
  std::set<NodePair> unique;
  for (const auto& p : pairs) {
    if (!universe.contains(p.first) || !universe.contains(p.second)) throw EndpointOutsideUniverse(p);
    unique.insert(p);
  }
  return ExchangeRelation(std::move(universe), std::move(unique));
}

ExchangeRelation inverse(const ExchangeRelation& r) {
  std::vector<NodePair> flipped;
  flipped.reserve(r.size());
  for (const auto& [from, to] : r.pairs()) flipped.emplace_back(to, from);
  return build_relation(r.universe(), flipped);
}

ExchangeRelation compose(const ExchangeRelation& r, const ExchangeRelation& s) {
  require_same_universe(r, s, "compose");
  std::vector<NodePair> out;
  for (const auto& [x, z] : r.pairs()) {
    // pairs are ordered lexicographically, so s's pairs leaving z are contiguous
    for (auto it = s.pairs().lower_bound({z, NodeId(1)}); it != s.pairs().end() && it->first == z; ++it)
      out.emplace_back(x, it->second);
  }
  return build_relation(r.universe(), out);
}

ExchangeRelation union_of(const ExchangeRelation& r, const ExchangeRelation& s) {
  require_same_universe(r, s, "union");
  std::vector<NodePair> out(r.pairs().begin(), r.pairs().end());
  out.insert(out.end(), s.pairs().begin(), s.pairs().end());
  return build_relation(r.universe(), out);
}

ExchangeRelation symmetric_closure(const ExchangeRelation& r) { return union_of(r, inverse(r)); }

bool is_transitive(const ExchangeRelation& r) {
  for (const auto& [x, z] : r.pairs()) {
    for (auto it = r.pairs().lower_bound({z, NodeId(1)}); it != r.pairs().end() && it->first == z; ++it) {
      if (!r.contains(x, it->second)) return false;
    }
  }
  return true;
}

ValidityReport is_valid_exchange(const ExchangeRelation& r) {
  ValidityReport report;
  for (const auto& p : r.pairs()) {
    if (p.first == p.second) {
      report.valid = false;
      report.violation = ValidityReport::Violation::reflexive_pair;
      report.offending = p;
      report.diagnostic = "reflexive pair " + pair_text(p);
      return report;
    }
    if (!r.contains(p.second, p.first)) {
      report.valid = false;
      report.violation = ValidityReport::Violation::missing_reverse;
      report.offending = p;
      report.diagnostic = "pair " + pair_text(p) + " has no reverse " + pair_text({p.second, p.first});
      return report;
    }
  }
  return report;
}

ExchangeGraph to_graph(const ExchangeRelation& r) {
  if (auto report = is_valid_exchange(r); !report) throw InvalidExchangeRelation(report.diagnostic);
  ExchangeGraph g{r.universe(), {}};
  for (const auto& [from, to] : r.pairs()) {
    if (from < to) g.edges.emplace(from, to);
  }
  return g;
}

ExchangeRelation to_relation(const ExchangeGraph& g) {
  std::vector<NodePair> pairs;
  for (const auto& [a, b] : g.edges) {
    pairs.emplace_back(a, b);
    pairs.emplace_back(b, a);
  }
  return build_relation(g.vertices, pairs);
}

PeerList peers_of(const ExchangeRelation& r, NodeId x) {
  if (auto report = is_valid_exchange(r); !report) throw InvalidExchangeRelation(report.diagnostic);
  PeerList peers;
  for (auto it = r.pairs().lower_bound({x, NodeId(1)}); it != r.pairs().end() && it->first == x; ++it)
    peers.push_back(it->second);
  return peers;
}

std::string format_relation(const ExchangeRelation& r) {
  std::ostringstream os;
  os << "universe:";
  for (auto id : r.universe()) os << ' ' << id;
  os << '\n';
  for (const auto& [from, to] : r.pairs()) os << from << ',' << to << '\n';
  return os.str();
}

ExchangeRelation parse_relation(std::string_view text) {
  std::set<NodeId> universe;
  std::vector<NodePair> pairs;
  bool have_header = false;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    if (!have_header) {
      constexpr std::string_view prefix = "universe:";
      if (!line.starts_with(prefix)) throw RelationParseError("line 1: expected 'universe:' header");
      std::istringstream ids{std::string(line.substr(prefix.size()))};
      std::string token;
      while (ids >> token) universe.insert(parse_id(token));
      have_header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string_view::npos)
      throw RelationParseError("line " + std::to_string(line_no) + ": expected 'from,to'");
    pairs.emplace_back(parse_id(line.substr(0, comma)), parse_id(line.substr(comma + 1)));
  }
  if (!have_header) throw RelationParseError("missing 'universe:' header");
  return build_relation(std::move(universe), pairs);
}

}  // namespace tdm
