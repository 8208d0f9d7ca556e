#pragma once

// Live two-stage pipeline: a receiver thread decodes datagrams into samples
// and feeds a bounded queue; the calling thread classifies them.

#include <atomic>
#include <cstdint>
#include <functional>

#include "actipipe/classifier.hpp"
#include "actipipe/pipeline.hpp"

namespace actipipe {

struct LiveOptions {
    std::uint16_t port = 0;
    PipelineConfig pipeline{};
    std::size_t queue_capacity = 1024;  // samples
    /// Stop after this many decisions; 0 runs until `stop` is set.
    std::size_t max_windows = 0;
    const std::atomic<bool>* stop = nullptr;
    std::function<void(std::uint16_t node_id, const classifier::Decision&)> on_decision;
    /// Called once the socket is bound, with the actual port.
    std::function<void(std::uint16_t port)> on_ready;
};

struct LiveStats {
    std::size_t datagrams = 0;
    std::size_t corrupt = 0;
    std::size_t duplicates = 0;
    std::size_t late_dropped = 0;
    std::size_t samples = 0;
    std::size_t decisions = 0;
    std::size_t queue_high_water = 0;
};

LiveStats run_live(const LiveOptions& opts);

}  // namespace actipipe
