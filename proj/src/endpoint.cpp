#include "tdm/endpoint.hpp"

#include <iostream>
#include <set>
#include <string>

namespace tdm {

DuplicateBufferedMessage::DuplicateBufferedMessage(std::uint64_t slot_, NodeId sender_)
    : ProtocolError("duplicate message for slot " + std::to_string(slot_) + " from node " + to_string(sender_)),
      slot(slot_),
      sender(sender_) {}

ReceiveTimeout::ReceiveTimeout(std::uint64_t slot_, NodeId awaited_)
    : ProtocolError("timed out in slot " + std::to_string(slot_) + " waiting for node " + to_string(awaited_)),
      slot(slot_),
      awaited(awaited_) {}

ScheduleRunError::ScheduleRunError(std::uint64_t slot_, NodeId node_, std::exception_ptr cause,
                                   const std::string& what)
    : Error("node " + to_string(node_) + ", slot " + std::to_string(slot_) + ": " + what),
      slot(slot_),
      node(node_),
      cause_(std::move(cause)) {}

void SlotBuffer::stash(WireMessage msg) {
  const std::pair key{msg.time_slot, msg.sender};
  if (entries_.contains(key)) throw DuplicateBufferedMessage(key.first, key.second);
  entries_.emplace(key, std::move(msg));
}

std::optional<WireMessage> SlotBuffer::take(std::uint64_t slot, NodeId sender) {
  auto node = entries_.extract({slot, sender});
  if (node.empty()) return std::nullopt;
  return std::move(node.mapped());
}

Endpoint::Endpoint(NodeId id, std::unique_ptr<Transport> transport, EndpointOptions options)
    : id_(id), transport_(std::move(transport)), options_(options) {
  if (!transport_) throw std::invalid_argument("endpoint needs a transport");
}

void Endpoint::check_peers(std::span<const NodeId> peer_ids) const {
  if (peer_ids.empty()) throw EmptyPeerList("node " + to_string(id_) + ": exchange with an empty peer list");
  std::set<NodeId> seen;
  for (auto peer : peer_ids) {
    if (peer == id_) throw SelfInPeerList("node " + to_string(id_) + " lists itself as a peer");
    if (!seen.insert(peer).second)
      throw DuplicatePeerId("node " + to_string(id_) + " lists peer " + to_string(peer) + " twice");
  }
}

WireMessage Endpoint::await(NodeId peer) {
  if (auto hit = buffer_.take(time_slot_, peer)) {
    ++stats_.buffer_hits;
    return std::move(*hit);
  }
  for (;;) {
    std::optional<WireMessage> msg;
    if (options_.receive_timeout) {
      msg = transport_->receive_for(*options_.receive_timeout);
      if (!msg) throw ReceiveTimeout(time_slot_, peer);
    } else {
      msg = transport_->receive();
    }
    if (msg->time_slot == time_slot_ && msg->sender == peer) return std::move(*msg);

    // Either a later slot from a peer running ahead, or this slot from a peer
    // further down the list.
    buffer_.stash(std::move(*msg));
    ++stats_.stashed;
    if (options_.buffer_high_water != 0 && buffer_.size() == options_.buffer_high_water)
      std::cerr << "tdm: node " << id_ << ": slot buffer reached " << buffer_.size() << " entries\n";
  }
}

std::optional<std::vector<Bytes>> Endpoint::exchange(std::span<const NodeId> peer_ids,
                                                     const std::optional<Bytes>& payload) {
  if (!payload) {
    ++time_slot_;
    return std::nullopt;
  }
  check_peers(peer_ids);

  const WireMessage outgoing{time_slot_, id_, *payload};
  for (auto peer : peer_ids) transport_->send(peer, outgoing);

  std::vector<Bytes> received;
  received.reserve(peer_ids.size());
  for (auto peer : peer_ids) received.push_back(await(peer).payload);

  ++time_slot_;
  return received;
}

Bytes Endpoint::exchange_pairwise(NodeId peer, const Bytes& payload) {
  const NodeId peers[] = {peer};
  return std::move(exchange(peers, payload)->front());
}

std::map<std::uint64_t, std::vector<Bytes>> run_schedule(Endpoint& endpoint, const SlotSchedule& schedule,
                                                         const std::function<Bytes(std::uint64_t)>& payload_for_slot,
                                                         ExchangeMode mode) {
  if (endpoint.time_slot() != 0) throw std::logic_error("run_schedule needs an endpoint at slot 0");
  std::map<std::uint64_t, std::vector<Bytes>> results;
  for (const auto& plan : schedule.slots) {
    try {
      const auto* peers = plan.peers(endpoint.id());
      if (peers == nullptr) {
        endpoint.skip();
        continue;
      }
      if (mode == ExchangeMode::pairwise) {
        if (peers->size() != 1)
          throw std::invalid_argument("pairwise mode needs exactly one peer, got " + std::to_string(peers->size()));
        results.emplace(plan.slot, std::vector<Bytes>{endpoint.exchange_pairwise(peers->front(), payload_for_slot(plan.slot))});
      } else {
        results.emplace(plan.slot, *endpoint.exchange(*peers, payload_for_slot(plan.slot)));
      }
    } catch (const std::exception& e) {
      throw ScheduleRunError(plan.slot, endpoint.id(), std::current_exception(), e.what());
    }
  }
  return results;
}

}  // namespace tdm
