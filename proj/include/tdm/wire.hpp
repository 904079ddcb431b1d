#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>

#include "tdm/error.hpp"
#include "tdm/node_id.hpp"

namespace tdm {

/// One protocol message: the sender's payload for a given time slot.
struct WireMessage {
  std::uint64_t time_slot = 0;
  NodeId sender{1};
  Bytes payload;

  friend bool operator==(const WireMessage&, const WireMessage&) = default;
};

// Frame layout, all integers big-endian:
//   len:u32 | slot:u64 | sender:u32 | payload[len - 12]
inline constexpr std::size_t kLengthPrefixBytes = 4;
inline constexpr std::size_t kBodyHeaderBytes = 12;
inline constexpr std::size_t kDefaultMaxBodyBytes = std::size_t{1} << 20;

class FrameTooLarge : public Error {
 public:
  using Error::Error;
};

class MalformedFrame : public Error {
 public:
  using Error::Error;
};

/// Throws FrameTooLarge when the encoded body would exceed `max_body_bytes`.
void check_frame_size(const WireMessage& msg, std::size_t max_body_bytes = kDefaultMaxBodyBytes);

Bytes encode_body(const WireMessage& msg);
Bytes encode_frame(const WireMessage& msg, std::size_t max_body_bytes = kDefaultMaxBodyBytes);
WireMessage decode_body(std::span<const std::uint8_t> body);

/// Incremental decoder for a byte stream of length-prefixed frames.
class FrameDecoder {
 public:
  explicit FrameDecoder(std::size_t max_body_bytes = kDefaultMaxBodyBytes) : max_body_bytes_(max_body_bytes) {}

  void feed(std::span<const std::uint8_t> bytes);

  /// Next complete message, or nullopt when more bytes are needed. Throws
  /// FrameTooLarge / MalformedFrame on a corrupt stream.
  std::optional<WireMessage> next();

  std::size_t buffered() const noexcept { return buffer_.size(); }

 private:
  std::size_t max_body_bytes_;
  std::deque<std::uint8_t> buffer_;
};

}  // namespace tdm
