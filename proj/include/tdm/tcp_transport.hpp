#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>

#include "tdm/transport.hpp"

namespace tdm {

struct LinkAddress {
  std::string host;
  std::uint16_t port = 0;

  std::string to_string() const { return host + ":" + std::to_string(port); }
  friend bool operator==(const LinkAddress&, const LinkAddress&) = default;
};

/// Parses "host:port". Throws std::invalid_argument.
LinkAddress parse_link_address(std::string_view text);

using PeerTable = std::map<NodeId, LinkAddress>;

/// One "<nodeId> <host>:<port>" entry per line; blank lines and lines
/// starting with '#' are ignored.
PeerTable parse_peer_table(std::string_view text);

class ConnectRefused : public TransportError {
 public:
  ConnectRefused(const LinkAddress& addr, const std::string& reason)
      : TransportError("connect to " + addr.to_string() + " failed: " + reason), address(addr) {}
  LinkAddress address;
};

class BindFailed : public TransportError {
 public:
  BindFailed(const LinkAddress& addr, const std::string& reason)
      : TransportError("bind to " + addr.to_string() + " failed: " + reason), address(addr) {}
  LinkAddress address;
};

struct TcpOptions {
  /// Port 0 binds an ephemeral port; see TcpTransport::local_address().
  LinkAddress listen{"127.0.0.1", 0};
  PeerTable peers;
  std::size_t max_body_bytes = kDefaultMaxBodyBytes;
};

/// TCP links with length-prefixed frames. Every directed link is its own
/// connection, opened by the sender on first use (or up front via connect()).
/// All inbound connections are drained by one background thread into a
/// single inbox.
class TcpTransport final : public Transport {
 public:
  /// Binds and starts listening. Throws BindFailed.
  TcpTransport(NodeId self, TcpOptions options);
  ~TcpTransport() override;

  TcpTransport(const TcpTransport&) = delete;
  TcpTransport& operator=(const TcpTransport&) = delete;

  LinkAddress local_address() const { return bound_; }

  /// Adds or replaces a peer address. Takes effect on the next connect.
  void set_peer(NodeId peer, LinkAddress addr);

  /// Opens the outbound link to `peer` now. Throws ConnectRefused.
  void connect(NodeId peer);

  NodeId self() const override { return self_; }
  void send(NodeId to, const WireMessage& msg) override;
  WireMessage receive() override;
  std::optional<WireMessage> receive_for(std::chrono::milliseconds timeout) override;
  void close() override;

 private:
  int outbound_fd(NodeId peer);
  void io_loop();
  bool input_exhausted() const;

  NodeId self_;
  TcpOptions options_;
  LinkAddress bound_;
  int listen_fd_ = -1;
  int wake_pipe_[2] = {-1, -1};

  std::mutex out_mu_;
  std::map<NodeId, int> outbound_;

  mutable std::mutex in_mu_;
  std::condition_variable in_cv_;
  std::deque<WireMessage> inbox_;
  std::size_t inbound_opened_ = 0;
  std::size_t inbound_closed_ = 0;
  bool closed_ = false;

  std::thread io_thread_;
};

}  // namespace tdm
