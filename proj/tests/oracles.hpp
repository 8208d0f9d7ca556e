#pragma once

// Reference implementations used only by tests. Each one is written the
// slow, obvious way so it shares no code path with the library.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

namespace oracle {

/// Bit-at-a-time CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF, no reflection).
inline std::uint16_t crc16_bitwise(std::span<const std::uint8_t> bytes) {
    std::uint16_t crc = 0xFFFF;
    for (std::uint8_t b : bytes) {
        for (int bit = 7; bit >= 0; --bit) {
            const bool in = ((b >> bit) & 1) != 0;
            const bool top = (crc & 0x8000) != 0;
            crc = static_cast<std::uint16_t>(crc << 1);
            if (in != top) crc ^= 0x1021;
        }
    }
    return crc;
}

/// One-sided periodogram of a single segment by direct DFT, density scaled
/// with window w: |X_k|^2 / (fs * sum w^2), doubled except at DC and Nyquist.
inline std::vector<double> periodogram(std::span<const double> x, std::span<const double> w, double fs) {
    const std::size_t n = x.size();
    double wp = 0.0;
    for (double v : w) wp += v * v;
    std::vector<double> out(n / 2 + 1);
    for (std::size_t k = 0; k < out.size(); ++k) {
        std::complex<double> acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * i % n) / static_cast<double>(n);
            acc += x[i] * w[i] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        double p = std::norm(acc) / (fs * wp);
        if (k != 0 && !(n % 2 == 0 && k == n / 2)) p *= 2.0;
        out[k] = p;
    }
    return out;
}

/// Median frequency by brute force: integrate the piecewise-linear PSD on a
/// fine grid and return the first point where the running area reaches half.
inline double median_frequency_fine(std::span<const double> pxx, double df, int sub = 2000) {
    std::vector<double> f, y;
    for (std::size_t k = 0; k + 1 < pxx.size(); ++k) {
        for (int j = 0; j < sub; ++j) {
            const double t = static_cast<double>(j) / sub;
            f.push_back((static_cast<double>(k) + t) * df);
            y.push_back(pxx[k] + t * (pxx[k + 1] - pxx[k]));
        }
    }
    f.push_back(static_cast<double>(pxx.size() - 1) * df);
    y.push_back(pxx.back());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < y.size(); ++i) total += 0.5 * (y[i] + y[i + 1]) * (f[i + 1] - f[i]);
    double cum = 0.0;
    for (std::size_t i = 0; i + 1 < y.size(); ++i) {
        cum += 0.5 * (y[i] + y[i + 1]) * (f[i + 1] - f[i]);
        if (cum >= 0.5 * total) return f[i + 1];
    }
    return f.back();
}

/// Least-squares fit of a*sin(wt) + b*cos(wt) + c; returns the amplitude.
inline double sine_amplitude(std::span<const double> y, double freq_hz, double fs) {
    // Normal equations for three unknowns, solved by Cramer's rule.
    double m[3][3] = {}, r[3] = {};
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double t = static_cast<double>(i) / fs;
        const double basis[3] = {std::sin(2 * std::numbers::pi * freq_hz * t),
                                 std::cos(2 * std::numbers::pi * freq_hz * t), 1.0};
        for (int a = 0; a < 3; ++a) {
            r[a] += basis[a] * y[i];
            for (int b = 0; b < 3; ++b) m[a][b] += basis[a] * basis[b];
        }
    }
    auto det3 = [](double q[3][3]) {
        return q[0][0] * (q[1][1] * q[2][2] - q[1][2] * q[2][1]) -
               q[0][1] * (q[1][0] * q[2][2] - q[1][2] * q[2][0]) +
               q[0][2] * (q[1][0] * q[2][1] - q[1][1] * q[2][0]);
    };
    const double d = det3(m);
    double sol[3];
    for (int c = 0; c < 3; ++c) {
        double q[3][3];
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) q[a][b] = b == c ? r[a] : m[a][b];
        sol[c] = det3(q) / d;
    }
    return std::hypot(sol[0], sol[1]);
}

}  // namespace oracle
