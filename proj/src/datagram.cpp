#include "actipipe/datagram.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

namespace actipipe::wire {

namespace {

[[noreturn]] void throw_errno(const std::string& what) {
    throw Error("wire", "SocketError", what + ": " + std::strerror(errno));
}

}  // namespace

DatagramReceiver::DatagramReceiver(std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) throw_errno("socket");
    int yes = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    addr.sin_port = htons(port);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
        int saved = errno;
        ::close(fd_);
        errno = saved;
        throw_errno("bind port " + std::to_string(port));
    }
    socklen_t len = sizeof(addr);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

DatagramReceiver::~DatagramReceiver() {
    if (fd_ >= 0) ::close(fd_);
}

std::optional<std::vector<std::uint8_t>> DatagramReceiver::receive(std::chrono::milliseconds timeout) {
    pollfd pfd{fd_, POLLIN, 0};
    int rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
    if (rc < 0) {
        if (errno == EINTR) return std::nullopt;
        throw_errno("poll");
    }
    if (rc == 0) return std::nullopt;

    std::vector<std::uint8_t> buf(2048);
    ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
    if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) return std::nullopt;
        throw_errno("recv");
    }
    buf.resize(static_cast<std::size_t>(n));
    return buf;
}

DatagramSender::DatagramSender(const std::string& host, std::uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_DGRAM;
    addrinfo* res = nullptr;
    int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res);
    if (rc != 0 || res == nullptr) {
        throw Error("wire", "SocketError", "resolve " + host + ": " + ::gai_strerror(rc));
    }
    auto* raw = reinterpret_cast<const std::uint8_t*>(res->ai_addr);
    addr_.assign(raw, raw + res->ai_addrlen);
    ::freeaddrinfo(res);

    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) throw_errno("socket");
}

DatagramSender::~DatagramSender() {
    if (fd_ >= 0) ::close(fd_);
}

void DatagramSender::send(std::span<const std::uint8_t> bytes) {
    ssize_t n = ::sendto(fd_, bytes.data(), bytes.size(), 0,
                         reinterpret_cast<const sockaddr*>(addr_.data()),
                         static_cast<socklen_t>(addr_.size()));
    if (n < 0) throw_errno("sendto");
}

}  // namespace actipipe::wire
