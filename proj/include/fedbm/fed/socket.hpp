/*
 * Copyright 2026 The fedbm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace fedbm::fed {

class SocketError : public std::runtime_error {
 public:
  explicit SocketError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void throw_errno(const std::string& what) {
  throw SocketError(what + ": " + std::strerror(errno));
}

}  // namespace detail

/// Line-oriented TCP connection (newline-delimited message framing).
class TcpStream {
 public:
  TcpStream() = default;
  explicit TcpStream(int fd) : fd_(fd) {}

  TcpStream(const TcpStream&) = delete;
  TcpStream& operator=(const TcpStream&) = delete;

  TcpStream(TcpStream&& other) noexcept
      : fd_(other.fd_), buffer_(std::move(other.buffer_)) {
    other.fd_ = -1;
  }
  TcpStream& operator=(TcpStream&& other) noexcept {
    if (this != &other) {
      close();
      fd_ = other.fd_;
      buffer_ = std::move(other.buffer_);
      other.fd_ = -1;
    }
    return *this;
  }

  ~TcpStream() { close(); }

  static TcpStream connect(const std::string& host, std::uint16_t port,
                           double timeout_seconds = 10.0) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* result = nullptr;
    const std::string service = std::to_string(port);
    const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &result);
    if (rc != 0) {
      throw SocketError("cannot resolve " + host + ": " + gai_strerror(rc));
    }
    int fd = -1;
    for (addrinfo* ai = result; ai != nullptr; ai = ai->ai_next) {
      fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (fd < 0) {
        continue;
      }
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
        break;
      }
      ::close(fd);
      fd = -1;
    }
    ::freeaddrinfo(result);
    if (fd < 0) {
      throw SocketError("cannot connect to " + host + ":" + service);
    }
    TcpStream stream(fd);
    stream.default_timeout_ = timeout_seconds;
    return stream;
  }

  bool open() const { return fd_ >= 0; }
  int fd() const { return fd_; }

  void send_line(const std::string& line) {
    std::string framed = line;
    framed.push_back('\n');
    std::size_t sent = 0;
    while (sent < framed.size()) {
      const ssize_t n = ::send(fd_, framed.data() + sent, framed.size() - sent,
                               MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) {
          continue;
        }
        detail::throw_errno("send failed");
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  /// Reads up to the next newline. Returns nullopt on orderly shutdown;
  /// throws on timeout or error. timeout < 0 blocks indefinitely.
  std::optional<std::string> recv_line(double timeout_seconds = -2.0) {
    if (timeout_seconds == -2.0) {
      timeout_seconds = default_timeout_;
    }
    for (;;) {
      const auto pos = buffer_.find('\n');
      if (pos != std::string::npos) {
        std::string line = buffer_.substr(0, pos);
        buffer_.erase(0, pos + 1);
        if (!line.empty() && line.back() == '\r') {
          line.pop_back();
        }
        return line;
      }
      if (timeout_seconds >= 0.0) {
        pollfd pfd{fd_, POLLIN, 0};
        const int pr = ::poll(&pfd, 1, static_cast<int>(timeout_seconds * 1000));
        if (pr == 0) {
          throw SocketError("timed out waiting for response");
        }
        if (pr < 0) {
          if (errno == EINTR) {
            continue;
          }
          detail::throw_errno("poll failed");
        }
      }
      char chunk[4096];
      const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
      if (n == 0) {
        return std::nullopt;
      }
      if (n < 0) {
        if (errno == EINTR) {
          continue;
        }
        detail::throw_errno("recv failed");
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  void shutdown() {
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_RDWR);
    }
  }

  void close() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  int fd_ = -1;
  std::string buffer_;
  double default_timeout_ = -1.0;
};

class TcpListener {
 public:
  TcpListener() = default;

  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;
  TcpListener(TcpListener&& other) noexcept
      : fd_(other.fd_), port_(other.port_) {
    other.fd_ = -1;
  }
  TcpListener& operator=(TcpListener&& other) noexcept {
    if (this != &other) {
      close();
      fd_ = other.fd_;
      port_ = other.port_;
      other.fd_ = -1;
    }
    return *this;
  }

  ~TcpListener() { close(); }

  /// Binds and listens; port 0 picks a free port (readable via port()).
  static TcpListener bind_and_listen(const std::string& host,
                                     std::uint16_t port, int backlog = 64) {
    TcpListener listener;
    listener.fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listener.fd_ < 0) {
      detail::throw_errno("socket failed");
    }
    const int one = 1;
    ::setsockopt(listener.fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (host.empty() || host == "0.0.0.0") {
      addr.sin_addr.s_addr = INADDR_ANY;
    } else if (host == "localhost") {
      addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    } else if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
      throw SocketError("cannot parse listen address: " + host);
    }
    if (::bind(listener.fd_, reinterpret_cast<sockaddr*>(&addr),
               sizeof(addr)) != 0) {
      detail::throw_errno("bind to " + host + ":" + std::to_string(port) +
                          " failed");
    }
    if (::listen(listener.fd_, backlog) != 0) {
      detail::throw_errno("listen failed");
    }
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(listener.fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    listener.port_ = ntohs(bound.sin_port);
    return listener;
  }

  /// Waits up to timeout_ms for a connection; nullopt on timeout or close.
  std::optional<TcpStream> accept(int timeout_ms) {
    if (fd_ < 0) {
      return std::nullopt;
    }
    pollfd pfd{fd_, POLLIN, 0};
    const int pr = ::poll(&pfd, 1, timeout_ms);
    if (pr <= 0) {
      return std::nullopt;
    }
    const int client = ::accept(fd_, nullptr, nullptr);
    if (client < 0) {
      return std::nullopt;
    }
    return TcpStream(client);
  }

  std::uint16_t port() const { return port_; }

  void close() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

}  // namespace fedbm::fed
