#pragma once

#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <thread>

namespace chromap::testing {

// Forwards loopback TCP connections to the server one at a time and counts
// every byte in both directions.
class ByteCountingRelay {
 public:
  explicit ByteCountingRelay(int upstream_port) : upstream_(upstream_port) {
    listener_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(listener_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(listener_, 8) != 0) {
      throw std::runtime_error("relay bind failed");
    }
    socklen_t len = sizeof(addr);
    ::getsockname(listener_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    thread_ = std::thread([this] { run(); });
  }
  ~ByteCountingRelay() {
    stop_ = true;
    thread_.join();
    ::close(listener_);
  }
  int port() const { return port_; }
  std::size_t bytes() const { return bytes_.load(); }
  int connections() const { return connections_.load(); }

 private:
  void run() {
    while (!stop_) {
      pollfd p{listener_, POLLIN, 0};
      if (::poll(&p, 1, 50) <= 0) continue;
      const int down = ::accept(listener_, nullptr, nullptr);
      if (down < 0) continue;
      ++connections_;
      const int up = ::socket(AF_INET, SOCK_STREAM, 0);
      sockaddr_in addr{};
      addr.sin_family = AF_INET;
      addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
      addr.sin_port = htons(static_cast<std::uint16_t>(upstream_));
      if (::connect(up, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0) pump(down, up);
      ::close(up);
      ::close(down);
    }
  }
  void pump(int a, int b) {
    char buf[16384];
    bool open_a = true, open_b = true;
    while (open_a || open_b) {
      pollfd fds[2] = {{open_a ? a : -1, POLLIN, 0}, {open_b ? b : -1, POLLIN, 0}};
      if (::poll(fds, 2, 2000) <= 0) return;
      for (int i = 0; i < 2; ++i) {
        if (!(fds[i].revents & (POLLIN | POLLHUP))) continue;
        const int from = i == 0 ? a : b, to = i == 0 ? b : a;
        const ssize_t n = ::read(from, buf, sizeof(buf));
        if (n <= 0) {
          ::shutdown(to, SHUT_WR);
          (i == 0 ? open_a : open_b) = false;
          continue;
        }
        bytes_ += static_cast<std::size_t>(n);
        for (ssize_t off = 0; off < n;) {
          const ssize_t w = ::write(to, buf + off, static_cast<std::size_t>(n - off));
          if (w <= 0) return;
          off += w;
        }
      }
    }
  }

  int upstream_;
  int listener_ = -1;
  int port_ = 0;
  std::atomic<bool> stop_{false};
  std::atomic<std::size_t> bytes_{0};
  std::atomic<int> connections_{0};
  std::thread thread_;
};

}  // namespace chromap::testing
