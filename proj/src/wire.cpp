#include "tdm/wire.hpp"

#include <string>

namespace tdm {

namespace {

template <typename T>
void put_be(Bytes& out, T value) {
  for (int shift = (sizeof(T) - 1) * 8; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(value >> shift));
}

template <typename T, typename It>
T get_be(It it) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i, ++it) value = static_cast<T>((value << 8) | *it);
  return value;
}

}  // namespace

void check_frame_size(const WireMessage& msg, std::size_t max_body_bytes) {
  const auto body = kBodyHeaderBytes + msg.payload.size();
  if (body > max_body_bytes || body > UINT32_MAX)
    throw FrameTooLarge("frame body of " + std::to_string(body) + " bytes exceeds limit of " +
                        std::to_string(max_body_bytes));
}

Bytes encode_body(const WireMessage& msg) {
  Bytes out;
  out.reserve(kBodyHeaderBytes + msg.payload.size());
  put_be<std::uint64_t>(out, msg.time_slot);
  put_be<std::uint32_t>(out, msg.sender.value());
  out.insert(out.end(), msg.payload.begin(), msg.payload.end());
  return out;
}

Bytes encode_frame(const WireMessage& msg, std::size_t max_body_bytes) {
  check_frame_size(msg, max_body_bytes);
  Bytes out;
  out.reserve(kLengthPrefixBytes + kBodyHeaderBytes + msg.payload.size());
  put_be<std::uint32_t>(out, static_cast<std::uint32_t>(kBodyHeaderBytes + msg.payload.size()));
  put_be<std::uint64_t>(out, msg.time_slot);
  put_be<std::uint32_t>(out, msg.sender.value());
  out.insert(out.end(), msg.payload.begin(), msg.payload.end());
  return out;
}

WireMessage decode_body(std::span<const std::uint8_t> body) {
  if (body.size() < kBodyHeaderBytes)
    throw MalformedFrame("frame body of " + std::to_string(body.size()) + " bytes is shorter than the header");
  const auto slot = get_be<std::uint64_t>(body.begin());
  const auto sender = get_be<std::uint32_t>(body.begin() + 8);
  if (sender == 0) throw MalformedFrame("frame carries sender id 0");
  return WireMessage{slot, NodeId(sender), Bytes(body.begin() + kBodyHeaderBytes, body.end())};
}

void FrameDecoder::feed(std::span<const std::uint8_t> bytes) { buffer_.insert(buffer_.end(), bytes.begin(), bytes.end()); }

std::optional<WireMessage> FrameDecoder::next() {
  if (buffer_.size() < kLengthPrefixBytes) return std::nullopt;
  const auto len = get_be<std::uint32_t>(buffer_.begin());
  if (len > max_body_bytes_)
    throw FrameTooLarge("incoming frame of " + std::to_string(len) + " bytes exceeds limit of " +
                        std::to_string(max_body_bytes_));
  if (len < kBodyHeaderBytes) throw MalformedFrame("frame length " + std::to_string(len) + " below header size");
  if (buffer_.size() < kLengthPrefixBytes + len) return std::nullopt;

  const auto first = buffer_.begin() + kLengthPrefixBytes;
  const Bytes body(first, first + len);
  buffer_.erase(buffer_.begin(), first + len);
  return decode_body(body);
}

}  // namespace tdm
