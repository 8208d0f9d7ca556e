#pragma once

// Per-second features: signal magnitude area over each decision window and
// median frequency of the z axis over a sliding spectral buffer.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "actipipe/dsp.hpp"
#include "actipipe/error.hpp"
#include "actipipe/types.hpp"

namespace actipipe::features {

struct FeatureVector {
    std::uint32_t window_start_ms = 0;
    double sma_g = 0.0;
    std::optional<double> fm_hz;  // absent until the spectral buffer fills
    std::size_t sample_count = 0;
    bool partial = false;  // trailing window shorter than the decision window

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

enum class FeatureErrorKind { EmptyWindow, InvalidConfig };

const char* to_string(FeatureErrorKind kind);

class FeatureError : public Error {
public:
    FeatureError(FeatureErrorKind kind, const std::string& detail)
        : Error("features", to_string(kind), detail), kind_(kind) {}
    FeatureErrorKind kind() const noexcept { return kind_; }

private:
    FeatureErrorKind kind_;
};

/// Time-average of |x| + |y| + |z| over the window:
///   (1/T) * sum_i (|x_i| + |y_i| + |z_i|) * dt,  dt = T / n.
double compute_sma(std::span<const Vec3> window, double duration_s);

struct FeatureConfig {
    double fs_hz = 50.0;
    std::size_t window_samples = 50;     // 1 s decision window
    std::size_t spectral_buffer = 256;   // z-axis samples fed to Welch
    dsp::WelchOptions welch{};

    void validate() const;
};

/// Streaming extractor for one node. Push preprocessed samples in time
/// order; a FeatureVector comes out at every decision-window boundary.
class FeatureExtractor {
public:
    explicit FeatureExtractor(FeatureConfig cfg = {});

    std::optional<FeatureVector> push(const TimedSample& s);
    /// Emits the trailing partial window, if any, flagged as partial.
    std::optional<FeatureVector> flush();

    const FeatureConfig& config() const { return cfg_; }

private:
    FeatureVector close_window(bool partial);

    FeatureConfig cfg_;
    dsp::WelchEstimator welch_;
    std::vector<Vec3> window_;
    std::uint32_t window_start_ms_ = 0;
    std::vector<double> zring_;
    std::size_t zhead_ = 0;
    std::size_t zfilled_ = 0;
    std::vector<double> zlinear_;
    dsp::SpectralDensity psd_;
};

/// Batch form: one FeatureVector per non-overlapping window, plus a flagged
/// partial window when the stream length is not a multiple of the window.
std::vector<FeatureVector> feature_stream(std::span<const TimedSample> preprocessed,
                                          const FeatureConfig& cfg = {});

/// `window_start_ms,sma_g,fm_hz`; fm_hz is empty when absent. Partial
/// windows are not written.
void write_features_csv(std::ostream& out, std::span<const FeatureVector> feats);
/// Inverse of write_features_csv. `window_samples` fills sample_count.
std::vector<FeatureVector> read_features_csv(std::istream& in, std::size_t window_samples = 50);

}  // namespace actipipe::features
