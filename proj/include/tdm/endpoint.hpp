#pragma once

#include <chrono>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "tdm/error.hpp"
#include "tdm/node_id.hpp"
#include "tdm/schedule.hpp"
#include "tdm/transport.hpp"
#include "tdm/wire.hpp"

namespace tdm {

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class SelfInPeerList : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

class DuplicatePeerId : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

class EmptyPeerList : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

/// A second message arrived for a (slot, sender) key that is already buffered.
class DuplicateBufferedMessage : public ProtocolError {
 public:
  DuplicateBufferedMessage(std::uint64_t slot, NodeId sender);
  std::uint64_t slot;
  NodeId sender;
};

class ReceiveTimeout : public ProtocolError {
 public:
  ReceiveTimeout(std::uint64_t slot, NodeId awaited);
  std::uint64_t slot;
  NodeId awaited;
};

/// Failure while driving a schedule. `cause()` holds the original exception.
class ScheduleRunError : public Error {
 public:
  ScheduleRunError(std::uint64_t slot, NodeId node, std::exception_ptr cause, const std::string& what);
  std::uint64_t slot;
  NodeId node;
  const std::exception_ptr& cause() const noexcept { return cause_; }

 private:
  std::exception_ptr cause_;
};

/// Messages that arrived before their receiver asked for them, keyed by
/// (slot, sender). Holds both messages from peers running ahead and
/// current-slot messages from peers later in the peer list.
class SlotBuffer {
 public:
  /// Throws DuplicateBufferedMessage if the key is already present.
  void stash(WireMessage msg);

  std::optional<WireMessage> take(std::uint64_t slot, NodeId sender);

  bool contains(std::uint64_t slot, NodeId sender) const { return entries_.contains({slot, sender}); }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::map<std::pair<std::uint64_t, NodeId>, WireMessage> entries_;
};

struct EndpointOptions {
  /// Turns an indefinite wait for a peer into ReceiveTimeout.
  std::optional<std::chrono::milliseconds> receive_timeout;
  /// Log a warning to stderr whenever the buffer reaches this size (0 = off).
  std::size_t buffer_high_water = 0;
};

struct EndpointStats {
  std::uint64_t stashed = 0;      ///< messages put into the buffer
  std::uint64_t buffer_hits = 0;  ///< expected messages served from the buffer
};

/// One node's side of the slot-synchronized exchange.
///
/// Every exchange() call, including a skip, consumes exactly one time slot.
/// Not reentrant: one context drives an endpoint at a time.
class Endpoint {
 public:
  Endpoint(NodeId id, std::unique_ptr<Transport> transport, EndpointOptions options = {});

  NodeId id() const noexcept { return id_; }
  std::uint64_t time_slot() const noexcept { return time_slot_; }
  std::size_t buffer_size() const noexcept { return buffer_.size(); }
  const EndpointStats& stats() const noexcept { return stats_; }
  Transport& transport() noexcept { return *transport_; }

  /// Sends `payload` to every peer, then collects each peer's payload for the
  /// current slot. The result is aligned with `peer_ids`. With no payload the
  /// node skips the slot: nothing is sent or received and the result is empty.
  std::optional<std::vector<Bytes>> exchange(std::span<const NodeId> peer_ids, const std::optional<Bytes>& payload);

  std::optional<std::vector<Bytes>> exchange(std::initializer_list<NodeId> peer_ids,
                                             const std::optional<Bytes>& payload) {
    return exchange(std::span<const NodeId>(peer_ids.begin(), peer_ids.size()), payload);
  }

  /// Single-peer exchange, the one-antenna case.
  Bytes exchange_pairwise(NodeId peer, const Bytes& payload);

  void skip() { exchange(std::span<const NodeId>{}, std::nullopt); }

 private:
  void check_peers(std::span<const NodeId> peer_ids) const;
  WireMessage await(NodeId peer);

  NodeId id_;
  std::unique_ptr<Transport> transport_;
  EndpointOptions options_;
  std::uint64_t time_slot_ = 0;
  SlotBuffer buffer_;
  EndpointStats stats_;
};

enum class ExchangeMode { multipeer, pairwise };

/// Drives a fresh endpoint through every slot of `schedule`, skipping the
/// slots in which it has no peer list. Returns the received payloads of each
/// slot it took part in, aligned with that slot's peer list. In pairwise mode
/// each slot goes through exchange_pairwise and peer lists must be singletons.
std::map<std::uint64_t, std::vector<Bytes>> run_schedule(Endpoint& endpoint, const SlotSchedule& schedule,
                                                         const std::function<Bytes(std::uint64_t)>& payload_for_slot,
                                                         ExchangeMode mode = ExchangeMode::multipeer);

}  // namespace tdm
