#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <utility>
#include <variant>
#include <vector>

#include "tdm/transport.hpp"

namespace tdm {

class LockstepScheduler;

/// Deliver in global send order.
struct FifoDelivery {};

/// Each receive picks uniformly among senders with pending messages.
/// Per-sender order is always preserved.
struct InterleavedDelivery {
  std::uint64_t seed = 0;
};

/// Per-receiver list of senders: the k-th receive at a node delivers the next
/// message from the k-th listed sender, waiting for it if necessary. Receives
/// beyond the script fall back to FIFO.
struct ScriptedDelivery {
  std::map<NodeId, std::vector<NodeId>> order;
};

using DeliveryPolicy = std::variant<FifoDelivery, InterleavedDelivery, ScriptedDelivery>;

struct SimOptions {
  DeliveryPolicy policy = FifoDelivery{};
  std::size_t max_body_bytes = kDefaultMaxBodyBytes;
  /// When set, every send is a preemption point and blocking receives hand
  /// control back to the scheduler. Must outlive the network.
  LockstepScheduler* scheduler = nullptr;
};

/// Per-node instrumentation.
struct SimCounters {
  std::uint64_t sends = 0;
  std::uint64_t receive_calls = 0;
  std::uint64_t delivered = 0;
};

/// In-process fully connected mesh. One FIFO queue per directed link, so the
/// links behave like reliable ordered connections; the delivery policy only
/// decides how a receiver interleaves its incoming links.
class SimNetwork : public std::enable_shared_from_this<SimNetwork> {
 public:
  SimNetwork(std::uint32_t node_count, SimOptions options);

  std::uint32_t node_count() const noexcept { return node_count_; }

  SimCounters counters(NodeId node) const;

  /// (sender, slot) of every message delivered to `node`, in delivery order.
  std::vector<std::pair<NodeId, std::uint64_t>> delivery_log(NodeId node) const;

  /// Messages sent to `node` that it has not received yet.
  std::size_t pending(NodeId node) const;

  // Used by SimTransport.
  void send(NodeId from, NodeId to, const WireMessage& msg);
  std::optional<WireMessage> receive(NodeId node, std::optional<std::chrono::milliseconds> timeout);
  void close(NodeId node);

 private:
  struct Inbox {
    std::map<NodeId, std::deque<std::pair<std::uint64_t, WireMessage>>> links;  // sender -> (seq, msg)
    std::size_t script_pos = 0;
    std::mt19937_64 rng;
    SimCounters counters;
    std::vector<std::pair<NodeId, std::uint64_t>> log;
    bool closed = false;
  };

  Inbox& inbox(NodeId node);
  const Inbox& inbox(NodeId node) const;
  bool has_deliverable(const Inbox& box) const;
  bool input_exhausted(NodeId node) const;
  WireMessage take(NodeId node, Inbox& box);

  std::uint32_t node_count_;
  SimOptions options_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::vector<Inbox> inboxes_;
  std::uint64_t next_seq_ = 0;
};

class SimTransport final : public Transport {
 public:
  SimTransport(std::shared_ptr<SimNetwork> network, NodeId self) : network_(std::move(network)), self_(self) {}
  ~SimTransport() override;

  NodeId self() const override { return self_; }
  void send(NodeId to, const WireMessage& msg) override;
  WireMessage receive() override;
  std::optional<WireMessage> receive_for(std::chrono::milliseconds timeout) override;
  void close() override;

  SimNetwork& network() const { return *network_; }

 private:
  std::shared_ptr<SimNetwork> network_;
  NodeId self_;
  bool closed_ = false;
};

struct SimMesh {
  std::shared_ptr<SimNetwork> network;
  /// handles[i] belongs to node i + 1.
  std::vector<std::unique_ptr<SimTransport>> handles;
};

SimMesh sim_create(std::uint32_t node_count, SimOptions options = {});

}  // namespace tdm
