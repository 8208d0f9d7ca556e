#pragma once

// UDP transport for sensor frames: one frame per datagram.

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "actipipe/wire.hpp"

namespace actipipe::wire {

class DatagramReceiver {
public:
    /// Binds 0.0.0.0:port. Port 0 picks an ephemeral port; see port().
    explicit DatagramReceiver(std::uint16_t port);
    ~DatagramReceiver();
    DatagramReceiver(const DatagramReceiver&) = delete;
    DatagramReceiver& operator=(const DatagramReceiver&) = delete;

    std::uint16_t port() const { return port_; }

    /// Waits up to `timeout` for one datagram. Returns nullopt on timeout.
    std::optional<std::vector<std::uint8_t>> receive(std::chrono::milliseconds timeout);

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

class DatagramSender {
public:
    DatagramSender(const std::string& host, std::uint16_t port);
    ~DatagramSender();
    DatagramSender(const DatagramSender&) = delete;
    DatagramSender& operator=(const DatagramSender&) = delete;

    void send(std::span<const std::uint8_t> bytes);
    void send(const SensorPacket& p) { auto f = encode_packet(p); send(f); }

private:
    int fd_ = -1;
    std::vector<std::uint8_t> addr_;
};

}  // namespace actipipe::wire
