#include "tdm/tcp_transport.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <iostream>
#include <sstream>
#include <vector>

namespace tdm {

namespace {

std::string errno_text(int err) { return std::strerror(err); }

struct AddrInfoDeleter {
  void operator()(addrinfo* ai) const { freeaddrinfo(ai); }
};

std::unique_ptr<addrinfo, AddrInfoDeleter> resolve(const LinkAddress& addr, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* result = nullptr;
  const auto port = std::to_string(addr.port);
  const int rc = getaddrinfo(addr.host.empty() ? nullptr : addr.host.c_str(), port.c_str(), &hints, &result);
  if (rc != 0) return nullptr;
  return std::unique_ptr<addrinfo, AddrInfoDeleter>(result);
}

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

}  // namespace

LinkAddress parse_link_address(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0)
    throw std::invalid_argument("expected host:port, got '" + std::string(text) + "'");
  const auto port_text = text.substr(colon + 1);
  unsigned port = 0;
  const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port > 65535)
    throw std::invalid_argument("bad port in '" + std::string(text) + "'");
  return LinkAddress{std::string(text.substr(0, colon)), static_cast<std::uint16_t>(port)};
}

PeerTable parse_peer_table(std::string_view text) {
  PeerTable table;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string id_text, addr_text;
    if (!(fields >> id_text) || id_text.starts_with('#')) continue;
    if (!(fields >> addr_text)) throw std::invalid_argument("peer table line " + std::to_string(line_no) + ": missing address");
    std::uint32_t id = 0;
    const auto [ptr, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
    if (ec != std::errc{} || ptr != id_text.data() + id_text.size() || id == 0)
      throw std::invalid_argument("peer table line " + std::to_string(line_no) + ": bad node id '" + id_text + "'");
    table[NodeId(id)] = parse_link_address(addr_text);
  }
  return table;
}

TcpTransport::TcpTransport(NodeId self, TcpOptions options) : self_(self), options_(std::move(options)) {
  auto ai = resolve(options_.listen, true);
  if (!ai) throw BindFailed(options_.listen, "cannot resolve address");

  int last_error = 0;
  for (auto* p = ai.get(); p != nullptr; p = p->ai_next) {
    const int fd = ::socket(p->ai_family, p->ai_socktype | SOCK_CLOEXEC, p->ai_protocol);
    if (fd < 0) {
      last_error = errno;
      continue;
    }
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd, p->ai_addr, p->ai_addrlen) == 0 && ::listen(fd, SOMAXCONN) == 0) {
      listen_fd_ = fd;
      break;
    }
    last_error = errno;
    ::close(fd);
  }
  if (listen_fd_ < 0) throw BindFailed(options_.listen, errno_text(last_error));

  sockaddr_storage local{};
  socklen_t len = sizeof(local);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&local), &len);
  const auto port = local.ss_family == AF_INET6 ? reinterpret_cast<sockaddr_in6*>(&local)->sin6_port
                                                : reinterpret_cast<sockaddr_in*>(&local)->sin_port;
  bound_ = LinkAddress{options_.listen.host, ntohs(port)};

  set_nonblocking(listen_fd_);
  if (::pipe2(wake_pipe_, O_CLOEXEC | O_NONBLOCK) != 0) {
    ::close(listen_fd_);
    throw TransportError("pipe: " + errno_text(errno));
  }
  io_thread_ = std::thread([this] { io_loop(); });
}

TcpTransport::~TcpTransport() {
  close();
  ::close(wake_pipe_[0]);
  ::close(wake_pipe_[1]);
}

void TcpTransport::set_peer(NodeId peer, LinkAddress addr) {
  std::lock_guard lock(out_mu_);
  options_.peers[peer] = std::move(addr);
}

void TcpTransport::connect(NodeId peer) {
  std::lock_guard lock(out_mu_);
  outbound_fd(peer);
}

// Caller holds out_mu_.
int TcpTransport::outbound_fd(NodeId peer) {
  if (auto it = outbound_.find(peer); it != outbound_.end()) return it->second;

  auto addr_it = options_.peers.find(peer);
  if (addr_it == options_.peers.end()) throw TransportError("no address for node " + to_string(peer));
  const auto& addr = addr_it->second;
  auto ai = resolve(addr, false);
  if (!ai) throw ConnectRefused(addr, "cannot resolve address");

  int last_error = 0;
  for (auto* p = ai.get(); p != nullptr; p = p->ai_next) {
    const int fd = ::socket(p->ai_family, p->ai_socktype | SOCK_CLOEXEC, p->ai_protocol);
    if (fd < 0) {
      last_error = errno;
      continue;
    }
    if (::connect(fd, p->ai_addr, p->ai_addrlen) == 0) {
      const int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      outbound_.emplace(peer, fd);
      return fd;
    }
    last_error = errno;
    ::close(fd);
  }
  throw ConnectRefused(addr, errno_text(last_error));
}

void TcpTransport::send(NodeId to, const WireMessage& msg) {
  const auto frame = encode_frame(msg, options_.max_body_bytes);
  std::lock_guard lock(out_mu_);
  {
    std::lock_guard in_lock(in_mu_);
    if (closed_) throw TransportClosed("node " + to_string(self_) + " transport is closed");
  }
  const int fd = outbound_fd(to);
  std::size_t written = 0;
  while (written < frame.size()) {
    const auto n = ::send(fd, frame.data() + written, frame.size() - written, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      outbound_.erase(to);
      throw TransportClosed("link " + to_string(self_) + "->" + to_string(to) + " failed: " + errno_text(err));
    }
    written += static_cast<std::size_t>(n);
  }
}

bool TcpTransport::input_exhausted() const {
  if (closed_) return true;
  return !options_.peers.empty() && inbound_closed_ >= options_.peers.size() && inbound_closed_ == inbound_opened_;
}

WireMessage TcpTransport::receive() {
  std::unique_lock lock(in_mu_);
  in_cv_.wait(lock, [&] { return !inbox_.empty() || input_exhausted(); });
  if (inbox_.empty()) throw TransportClosed("node " + to_string(self_) + ": all inbound links closed");
  auto msg = std::move(inbox_.front());
  inbox_.pop_front();
  return msg;
}

std::optional<WireMessage> TcpTransport::receive_for(std::chrono::milliseconds timeout) {
  std::unique_lock lock(in_mu_);
  if (!in_cv_.wait_for(lock, timeout, [&] { return !inbox_.empty() || input_exhausted(); })) return std::nullopt;
  if (inbox_.empty()) throw TransportClosed("node " + to_string(self_) + ": all inbound links closed");
  auto msg = std::move(inbox_.front());
  inbox_.pop_front();
  return msg;
}

void TcpTransport::close() {
  {
    std::lock_guard lock(in_mu_);
    if (closed_) return;
    closed_ = true;
  }
  in_cv_.notify_all();
  const char byte = 0;
  [[maybe_unused]] auto rc = ::write(wake_pipe_[1], &byte, 1);
  if (io_thread_.joinable()) io_thread_.join();

  std::lock_guard lock(out_mu_);
  for (const auto& [peer, fd] : outbound_) ::close(fd);
  outbound_.clear();
}

void TcpTransport::io_loop() {
  struct Inbound {
    int fd;
    FrameDecoder decoder;
  };
  std::vector<Inbound> links;
  std::vector<pollfd> fds;
  std::vector<std::uint8_t> chunk(64 * 1024);

  auto drop = [&](std::size_t i) {
    ::close(links[i].fd);
    links.erase(links.begin() + static_cast<std::ptrdiff_t>(i));
    {
      std::lock_guard lock(in_mu_);
      ++inbound_closed_;
    }
    in_cv_.notify_all();
  };

  for (;;) {
    fds.clear();
    fds.push_back({wake_pipe_[0], POLLIN, 0});
    fds.push_back({listen_fd_, POLLIN, 0});
    for (const auto& link : links) fds.push_back({link.fd, POLLIN, 0});

    if (::poll(fds.data(), fds.size(), -1) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (fds[0].revents != 0) break;

    if (fds[1].revents & POLLIN) {
      for (;;) {
        const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_NONBLOCK | SOCK_CLOEXEC);
        if (fd < 0) break;
        links.push_back({fd, FrameDecoder(options_.max_body_bytes)});
        std::lock_guard lock(in_mu_);
        ++inbound_opened_;
      }
    }

    // walk backwards so drop() does not disturb indices still to visit
    for (std::size_t i = fds.size(); i-- > 2;) {
      if (fds[i].revents == 0) continue;
      const std::size_t li = i - 2;
      bool eof = false;
      std::vector<WireMessage> decoded;
      try {
        for (;;) {
          const auto n = ::recv(links[li].fd, chunk.data(), chunk.size(), 0);
          if (n > 0) {
            links[li].decoder.feed(std::span(chunk.data(), static_cast<std::size_t>(n)));
            continue;
          }
          if (n < 0 && errno == EINTR) continue;
          eof = n == 0 || (errno != EAGAIN && errno != EWOULDBLOCK);
          break;
        }
        while (auto msg = links[li].decoder.next()) decoded.push_back(std::move(*msg));
      } catch (const Error& e) {
        std::cerr << "tdm: node " << self_ << ": dropping inbound link: " << e.what() << '\n';
        eof = true;
      }
      if (!decoded.empty()) {
        {
          std::lock_guard lock(in_mu_);
          for (auto& m : decoded) inbox_.push_back(std::move(m));
        }
        in_cv_.notify_all();
      }
      if (eof) drop(li);
    }
  }

  for (const auto& link : links) ::close(link.fd);
  ::close(listen_fd_);
}

}  // namespace tdm
