#pragma once

// Numerical kernels: despiking moving average, cascaded-biquad IIR
// filtering, Welch PSD, average power and median frequency.

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "actipipe/error.hpp"

namespace actipipe::dsp {

enum class DspErrorKind { InvalidWindow, UnsupportedRate, SignalTooShort, ZeroPower };

const char* to_string(DspErrorKind kind);

class DspError : public Error {
public:
    DspError(DspErrorKind kind, const std::string& detail)
        : Error("dsp", to_string(kind), detail), kind_(kind) {}
    DspErrorKind kind() const noexcept { return kind_; }

private:
    DspErrorKind kind_;
};

// ---- Moving average ------------------------------------------------------

/// Causal mean of the last `window` samples. At stream start the window
/// shrinks to however many samples exist; nothing is padded.
std::vector<double> moving_average(std::span<const double> signal, std::size_t window = 3);

/// Streaming form of moving_average. Produces identical output sample by
/// sample.
class MovingAverage {
public:
    explicit MovingAverage(std::size_t window = 3);
    double push(double x);
    void reset();

private:
    std::vector<double> ring_;
    std::size_t head_ = 0;
    std::size_t filled_ = 0;
};

// ---- IIR -----------------------------------------------------------------

/// Second-order section, direct form II transposed, a0 normalized to 1.
/// A first-order section is stored with b2 = a2 = 0.
struct BiquadSection {
    double b0 = 1, b1 = 0, b2 = 0;
    double a1 = 0, a2 = 0;
    double s1 = 0, s2 = 0;

    double process(double x) {
        const double y = b0 * x + s1;
        s1 = b1 * x - a1 * y + s2;
        s2 = b2 * x - a2 * y;
        return y;
    }

    /// Largest pole magnitude of 1 + a1 z^-1 + a2 z^-2.
    double pole_radius() const;
    /// Gain at z = 1.
    double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
    std::complex<double> response(double omega) const;
};

/// Cascade of biquads with an overall gain. Holds per-channel streaming
/// state; copy it to get an independent channel.
class SosFilter {
public:
    SosFilter() = default;
    SosFilter(std::vector<BiquadSection> sections, double gain, int order);

    double process(double x) {
        double y = gain_ * x;
        for (auto& s : sections_) y = s.process(y);
        return y;
    }

    /// Filters `signal` in place, continuing from the current state.
    void process(std::span<double> signal);

    void reset();
    /// Sets the state to the steady state reached under constant input `x0`,
    /// so a signal starting at x0 does not produce a start-up transient.
    void prime(double x0);

    /// Complex response at `freq_hz` for sample rate `fs_hz`.
    std::complex<double> response(double freq_hz, double fs_hz) const;
    double magnitude_db(double freq_hz, double fs_hz) const;

    const std::vector<BiquadSection>& sections() const { return sections_; }
    double gain() const { return gain_; }
    int order() const { return order_; }
    bool stable() const;

private:
    std::vector<BiquadSection> sections_;
    double gain_ = 1.0;
    int order_ = 0;
};

/// 7th-order elliptic high-pass, 0.5 Hz cutoff, 0.5 dB passband ripple,
/// 40 dB stopband attenuation. Only fs = 50 Hz is shipped.
SosFilter hpf_coefficients(double fs_hz);

/// Runs `signal` through `filter`, continuing from its current state.
std::vector<double> filter_apply(SosFilter& filter, std::span<const double> signal);

// ---- Spectral estimation -------------------------------------------------

enum class Window { Hann, Rectangular };

struct WelchOptions {
    std::size_t segment_len = 128;
    double overlap = 0.5;
    Window window = Window::Hann;
};

/// One-sided PSD. For even nfft the grid runs 0 .. fs/2 inclusive with
/// spacing fs/nfft.
struct SpectralDensity {
    std::vector<double> freqs_hz;
    std::vector<double> pxx;  // units^2 / Hz
    double fs_hz = 0.0;
    std::size_t nfft = 0;
    std::size_t segment_len = 0;
    std::size_t step = 0;
    std::size_t segments = 0;

    double bin_width() const { return fs_hz / static_cast<double>(nfft); }
};

/// Reusable Welch estimator. Owns its FFT plan and buffers, so one instance
/// must not be used from two threads at once.
class WelchEstimator {
public:
    WelchEstimator(double fs_hz, WelchOptions opts = {});
    ~WelchEstimator();
    WelchEstimator(const WelchEstimator&) = delete;
    WelchEstimator& operator=(const WelchEstimator&) = delete;
    WelchEstimator(WelchEstimator&&) noexcept;
    WelchEstimator& operator=(WelchEstimator&&) noexcept;

    SpectralDensity estimate(std::span<const double> signal);
    /// Same as estimate() but reuses `out`'s storage.
    void estimate(std::span<const double> signal, SpectralDensity& out);

    const WelchOptions& options() const { return opts_; }
    double fs_hz() const { return fs_; }

private:
    struct Impl;
    double fs_;
    WelchOptions opts_;
    std::unique_ptr<Impl> impl_;
};

/// Hann-windowed, overlapped, averaged periodograms. Interior bins carry the
/// one-sided factor 2; DC and Nyquist do not. No detrending.
SpectralDensity welch_psd(std::span<const double> signal, double fs_hz, const WelchOptions& opts = {});

/// fs * sum(pxx) / len(pxx), applied to the one-sided estimate as is.
double average_power(const SpectralDensity& psd);

/// Frequency splitting the trapezoidal area under pxx into two equal halves,
/// linearly interpolated inside the crossing bin. Throws ZeroPower when the
/// spectrum has no area.
double median_frequency(const SpectralDensity& psd);

}  // namespace actipipe::dsp
