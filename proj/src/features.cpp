#include "actipipe/features.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "actipipe/wire.hpp"

namespace actipipe::features {

const char* to_string(FeatureErrorKind kind) {
    switch (kind) {
        case FeatureErrorKind::EmptyWindow: return "EmptyWindow";
        case FeatureErrorKind::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

double compute_sma(std::span<const Vec3> window, double duration_s) {
    if (window.empty()) throw FeatureError(FeatureErrorKind::EmptyWindow, "SMA of an empty window");
    if (!(duration_s > 0.0)) {
        throw FeatureError(FeatureErrorKind::InvalidConfig, "SMA duration must be positive");
    }
    const double dt = duration_s / static_cast<double>(window.size());
    double area = 0.0;
    for (const auto& v : window) area += std::abs(v[0]) + std::abs(v[1]) + std::abs(v[2]);
    return area * dt / duration_s;
}

void FeatureConfig::validate() const {
    if (!(fs_hz > 0.0)) throw FeatureError(FeatureErrorKind::InvalidConfig, "fs must be positive");
    if (window_samples == 0) throw FeatureError(FeatureErrorKind::InvalidConfig, "empty decision window");
    if (spectral_buffer < welch.segment_len) {
        throw FeatureError(FeatureErrorKind::InvalidConfig,
                           "spectral buffer shorter than the Welch segment");
    }
}

FeatureExtractor::FeatureExtractor(FeatureConfig cfg)
    : cfg_((cfg.validate(), cfg)), welch_(cfg_.fs_hz, cfg_.welch) {
    window_.reserve(cfg_.window_samples);
    zring_.assign(cfg_.spectral_buffer, 0.0);
    zlinear_.resize(cfg_.spectral_buffer);
}

FeatureVector FeatureExtractor::close_window(bool partial) {
    FeatureVector f;
    f.window_start_ms = window_start_ms_;
    f.sample_count = window_.size();
    f.partial = partial;
    f.sma_g = compute_sma(window_, static_cast<double>(window_.size()) / cfg_.fs_hz);

    if (zfilled_ == zring_.size()) {
        const std::size_t n = zring_.size();
        for (std::size_t i = 0; i < n; ++i) zlinear_[i] = zring_[(zhead_ + i) % n];
        welch_.estimate(zlinear_, psd_);
        try {
            const double fm = dsp::median_frequency(psd_);
            if (fm > 0.0) f.fm_hz = fm;
        } catch (const dsp::DspError&) {
            // zero-power buffer: leave fm absent
        }
    }
    window_.clear();
    return f;
}

std::optional<FeatureVector> FeatureExtractor::push(const TimedSample& s) {
    if (window_.empty()) window_start_ms_ = s.timestamp_ms;
    window_.push_back(s.g);

    zring_[zhead_] = s.g[kZ];
    zhead_ = (zhead_ + 1) % zring_.size();
    if (zfilled_ < zring_.size()) ++zfilled_;

    if (window_.size() == cfg_.window_samples) return close_window(false);
    return std::nullopt;
}

std::optional<FeatureVector> FeatureExtractor::flush() {
    if (window_.empty()) return std::nullopt;
    return close_window(true);
}

std::vector<FeatureVector> feature_stream(std::span<const TimedSample> preprocessed,
                                          const FeatureConfig& cfg) {
    FeatureExtractor ex(cfg);
    std::vector<FeatureVector> out;
    out.reserve(preprocessed.size() / cfg.window_samples + 1);
    for (const auto& s : preprocessed) {
        if (auto f = ex.push(s)) out.push_back(*f);
    }
    if (auto f = ex.flush()) out.push_back(*f);
    return out;
}

void write_features_csv(std::ostream& out, std::span<const FeatureVector> feats) {
    out << "window_start_ms,sma_g,fm_hz\n";
    for (const auto& f : feats) {
        if (f.partial) continue;
        out << f.window_start_ms << ',' << wire::format_double(f.sma_g) << ',';
        if (f.fm_hz) out << wire::format_double(*f.fm_hz);
        out << '\n';
    }
}

std::vector<FeatureVector> read_features_csv(std::istream& in, std::size_t window_samples) {
    std::vector<FeatureVector> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || (line_no == 1 && line.rfind("window_start_ms", 0) == 0)) continue;
        std::stringstream ss(line);
        std::string t, sma, fm;
        std::getline(ss, t, ',');
        std::getline(ss, sma, ',');
        std::getline(ss, fm, ',');
        try {
            FeatureVector f;
            f.window_start_ms = static_cast<std::uint32_t>(std::stoul(t));
            f.sma_g = std::stod(sma);
            if (!fm.empty()) f.fm_hz = std::stod(fm);
            f.sample_count = window_samples;
            out.push_back(f);
        } catch (const std::exception&) {
            throw Error("features", "UnparsableRow", "features line " + std::to_string(line_no) + ": cannot parse '" + line + "'");
        }
    }
    return out;
}

}  // namespace actipipe::features
