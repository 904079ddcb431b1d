#pragma once

#include <chrono>
#include <optional>

#include "tdm/error.hpp"
#include "tdm/node_id.hpp"
#include "tdm/wire.hpp"

namespace tdm {

class TransportError : public Error {
 public:
  using Error::Error;
};

class TransportClosed : public TransportError {
 public:
  using TransportError::TransportError;
};

/// Raised by the lockstep scheduler when every live task is blocked.
class DeadlockDetected : public TransportError {
 public:
  using TransportError::TransportError;
};

/// A node's view of the network: send to any peer, receive from all peers
/// through one inbox.
///
/// Sends never wait for the receiver. Exactly one context (the owning
/// endpoint) may call receive at a time.
class Transport {
 public:
  virtual ~Transport() = default;

  virtual NodeId self() const = 0;

  /// Throws TransportClosed or FrameTooLarge; nothing is sent on error.
  virtual void send(NodeId to, const WireMessage& msg) = 0;

  /// Blocks until a message from any peer is available. Throws
  /// TransportClosed once the inbox is empty and no more input can arrive.
  virtual WireMessage receive() = 0;

  /// As receive(), but gives up after `timeout` and returns nullopt.
  virtual std::optional<WireMessage> receive_for(std::chrono::milliseconds timeout) = 0;

  virtual void close() = 0;
};

}  // namespace tdm
