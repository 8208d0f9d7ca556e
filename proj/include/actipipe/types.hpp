#pragma once

#include <array>
#include <cstdint>

namespace actipipe {

/// x, y, z triple. Units depend on context (mV before calibration, g after).
using Vec3 = std::array<double, 3>;

enum Axis : std::size_t { kX = 0, kY = 1, kZ = 2 };

/// One calibrated (or preprocessed) sample with its timestamp.
struct TimedSample {
    std::uint32_t timestamp_ms = 0;
    Vec3 g{};
};

}  // namespace actipipe
