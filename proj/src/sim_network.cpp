#include "tdm/sim_network.hpp"

#include <algorithm>
#include <limits>

#include "tdm/lockstep.hpp"

namespace tdm {

SimNetwork::SimNetwork(std::uint32_t node_count, SimOptions options)
    : node_count_(node_count), options_(std::move(options)), inboxes_(node_count) {
  if (node_count < 1) throw std::invalid_argument("simulated network needs at least one node");
  const auto* interleaved = std::get_if<InterleavedDelivery>(&options_.policy);
  for (std::uint32_t i = 0; i < node_count; ++i) {
    // independent stream per receiver, so one node's draws never depend on another's
    inboxes_[i].rng.seed((interleaved ? interleaved->seed : 0) ^ (0x9e3779b97f4a7c15ULL * (i + 1)));
  }
}

SimNetwork::Inbox& SimNetwork::inbox(NodeId node) {
  if (node.value() > node_count_) throw TransportError("unknown node " + to_string(node));
  return inboxes_[node.value() - 1];
}

const SimNetwork::Inbox& SimNetwork::inbox(NodeId node) const {
  if (node.value() > node_count_) throw TransportError("unknown node " + to_string(node));
  return inboxes_[node.value() - 1];
}

SimCounters SimNetwork::counters(NodeId node) const {
  std::lock_guard lock(mu_);
  return inbox(node).counters;
}

std::vector<std::pair<NodeId, std::uint64_t>> SimNetwork::delivery_log(NodeId node) const {
  std::lock_guard lock(mu_);
  return inbox(node).log;
}

std::size_t SimNetwork::pending(NodeId node) const {
  std::lock_guard lock(mu_);
  std::size_t total = 0;
  for (const auto& [sender, queue] : inbox(node).links) total += queue.size();
  return total;
}

void SimNetwork::send(NodeId from, NodeId to, const WireMessage& msg) {
  check_frame_size(msg, options_.max_body_bytes);
  {
    std::lock_guard lock(mu_);
    auto& src = inbox(from);
    if (src.closed) throw TransportClosed("node " + to_string(from) + " transport is closed");
    auto& dst = inbox(to);
    if (dst.closed) throw TransportClosed("link " + to_string(from) + "->" + to_string(to) + " is closed");
    ++src.counters.sends;
    dst.links[from].emplace_back(next_seq_++, msg);
  }
  cv_.notify_all();
  if (options_.scheduler != nullptr) options_.scheduler->yield();
}

bool SimNetwork::has_deliverable(const Inbox& box) const {
  if (const auto* scripted = std::get_if<ScriptedDelivery>(&options_.policy)) {
    const auto self = NodeId(static_cast<std::uint32_t>(&box - inboxes_.data()) + 1);
    if (auto it = scripted->order.find(self); it != scripted->order.end() && box.script_pos < it->second.size()) {
      auto link = box.links.find(it->second[box.script_pos]);
      return link != box.links.end() && !link->second.empty();
    }
  }
  return std::any_of(box.links.begin(), box.links.end(), [](const auto& kv) { return !kv.second.empty(); });
}

bool SimNetwork::input_exhausted(NodeId node) const {
  const auto& box = inbox(node);
  if (box.closed) return true;
  for (const auto& [sender, queue] : box.links) {
    if (!queue.empty()) return false;
  }
  for (std::uint32_t i = 0; i < node_count_; ++i) {
    if (i + 1 != node.value() && !inboxes_[i].closed) return false;
  }
  return true;
}

WireMessage SimNetwork::take(NodeId node, Inbox& box) {
  std::deque<std::pair<std::uint64_t, WireMessage>>* chosen = nullptr;

  if (const auto* scripted = std::get_if<ScriptedDelivery>(&options_.policy)) {
    if (auto it = scripted->order.find(node); it != scripted->order.end() && box.script_pos < it->second.size()) {
      chosen = &box.links[it->second[box.script_pos]];
      ++box.script_pos;
    }
  }
  if (chosen == nullptr && std::holds_alternative<InterleavedDelivery>(options_.policy)) {
    std::vector<std::deque<std::pair<std::uint64_t, WireMessage>>*> ready;
    for (auto& [sender, queue] : box.links) {
      if (!queue.empty()) ready.push_back(&queue);
    }
    chosen = ready[std::uniform_int_distribution<std::size_t>(0, ready.size() - 1)(box.rng)];
  }
  if (chosen == nullptr) {
    auto oldest = std::numeric_limits<std::uint64_t>::max();
    for (auto& [sender, queue] : box.links) {
      if (!queue.empty() && queue.front().first < oldest) {
        oldest = queue.front().first;
        chosen = &queue;
      }
    }
  }

  auto msg = std::move(chosen->front().second);
  chosen->pop_front();
  ++box.counters.delivered;
  box.log.emplace_back(msg.sender, msg.time_slot);
  return msg;
}

std::optional<WireMessage> SimNetwork::receive(NodeId node, std::optional<std::chrono::milliseconds> timeout) {
  if (options_.scheduler != nullptr && options_.scheduler->owns_current_thread()) {
    {
      std::lock_guard lock(mu_);
      ++inbox(node).counters.receive_calls;
    }
    // The scheduler detects deadlock exactly, so a timeout has nothing to add.
    options_.scheduler->block_until([&] {
      std::lock_guard lock(mu_);
      return has_deliverable(inbox(node)) || input_exhausted(node);
    });
    std::lock_guard lock(mu_);
    auto& box = inbox(node);
    if (!has_deliverable(box)) throw TransportClosed("node " + to_string(node) + ": no more input");
    return take(node, box);
  }

  std::unique_lock lock(mu_);
  auto& box = inbox(node);
  ++box.counters.receive_calls;
  auto ready = [&] { return has_deliverable(box) || input_exhausted(node); };
  if (timeout) {
    if (!cv_.wait_for(lock, *timeout, ready)) return std::nullopt;
  } else {
    cv_.wait(lock, ready);
  }
  if (!has_deliverable(box)) throw TransportClosed("node " + to_string(node) + ": no more input");
  return take(node, box);
}

void SimNetwork::close(NodeId node) {
  {
    std::lock_guard lock(mu_);
    inbox(node).closed = true;
  }
  cv_.notify_all();
}

SimTransport::~SimTransport() { close(); }

void SimTransport::send(NodeId to, const WireMessage& msg) {
  if (closed_) throw TransportClosed("node " + to_string(self_) + " transport is closed");
  network_->send(self_, to, msg);
}

WireMessage SimTransport::receive() {
  if (closed_) throw TransportClosed("node " + to_string(self_) + " transport is closed");
  return *network_->receive(self_, std::nullopt);
}

std::optional<WireMessage> SimTransport::receive_for(std::chrono::milliseconds timeout) {
  if (closed_) throw TransportClosed("node " + to_string(self_) + " transport is closed");
  return network_->receive(self_, timeout);
}

void SimTransport::close() {
  if (closed_) return;
  closed_ = true;
  network_->close(self_);
}

SimMesh sim_create(std::uint32_t node_count, SimOptions options) {
  SimMesh mesh;
  mesh.network = std::make_shared<SimNetwork>(node_count, std::move(options));
  mesh.handles.reserve(node_count);
  for (std::uint32_t i = 1; i <= node_count; ++i)
    mesh.handles.push_back(std::make_unique<SimTransport>(mesh.network, NodeId(i)));
  return mesh;
}

}  // namespace tdm
