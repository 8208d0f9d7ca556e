#pragma once

// Hierarchical threshold classifier: Rest vs movement on SMA, then Walk vs
// Run on SMA with the median frequency deciding inside an ambiguity band
// around the second threshold.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "actipipe/error.hpp"
#include "actipipe/features.hpp"

namespace actipipe::classifier {

enum class ActivityLabel { Rest, Walk, Run, Unknown };

inline constexpr std::size_t kLabelCount = 4;

const char* to_string(ActivityLabel l);
/// Accepts "Rest", "Walk", "Run", "Unknown" (case-insensitive).
ActivityLabel parse_label(std::string_view s);
inline std::size_t index(ActivityLabel l) { return static_cast<std::size_t>(l); }

struct ClassifierConfig {
    double th1_sma_g = 0.0;           // rest / movement
    double th2_sma_g = 0.0;           // walk / run
    double ambiguity_fraction = 0.0;  // band is th2 * (1 -/+ fraction)
    double fm_threshold_hz = 0.0;     // run iff fm >= this inside the band
    double window_s = 1.0;

    /// Throws ClassifierError{InvalidConfig}.
    void validate(double fs_hz = 50.0) const;

    double band_low() const { return th2_sma_g * (1.0 - ambiguity_fraction); }
    double band_high() const { return th2_sma_g * (1.0 + ambiguity_fraction); }

    /// Shipped defaults; identical to config/default_classifier.json.
    static ClassifierConfig defaults();

    friend bool operator==(const ClassifierConfig&, const ClassifierConfig&) = default;
};

enum class ClassifierErrorKind { InvalidConfig, MissingClass };

const char* to_string(ClassifierErrorKind kind);

class ClassifierError : public Error {
public:
    ClassifierError(ClassifierErrorKind kind, const std::string& detail)
        : Error("classifier", to_string(kind), detail), kind_(kind) {}
    ClassifierErrorKind kind() const noexcept { return kind_; }

private:
    ClassifierErrorKind kind_;
};

/// Unchecked decision rule; callers guarantee cfg is valid.
ActivityLabel decide(double sma_g, std::optional<double> fm_hz, const ClassifierConfig& cfg);

/// Validates cfg, then applies the decision rule.
ActivityLabel classify_window(const features::FeatureVector& f, const ClassifierConfig& cfg);

struct Decision {
    std::uint32_t window_start_ms = 0;
    ActivityLabel label = ActivityLabel::Unknown;
    std::optional<double> fm_hz;  // carried through for evaluation

    friend bool operator==(const Decision&, const Decision&) = default;
};

/// Pure map of classify_window; no smoothing between windows.
std::vector<Decision> stream_classify(std::span<const features::FeatureVector> feats,
                                      const ClassifierConfig& cfg);

struct LabeledFeature {
    features::FeatureVector feature;
    ActivityLabel truth = ActivityLabel::Rest;
};

struct FitGrid {
    std::size_t th2_steps = 64;
    std::size_t fm_steps = 64;
    double delta_max = 0.6;
    double delta_step = 0.02;
    double fs_hz = 50.0;
};

struct FitResult {
    ClassifierConfig config;
    double training_accuracy = 0.0;
    double rest_margin_g = 0.0;  // distance from th1 to the nearest training SMA
};

/// Grid search over th1 (rest/movement split), then th2 x delta x
/// fm_threshold maximizing training accuracy. Ties go to the smallest delta,
/// then th2 nearest the midpoint of the walk/run SMA medians, then
/// fm_threshold nearest the midpoint of the walk/run fm medians.
FitResult fit_thresholds_detailed(std::span<const LabeledFeature> labeled, const FitGrid& grid = {});
ClassifierConfig fit_thresholds(std::span<const LabeledFeature> labeled, const FitGrid& grid = {});

/// `window_start_ms,label`.
void write_decisions_csv(std::ostream& out, std::span<const Decision> decisions);
std::vector<Decision> read_decisions_csv(std::istream& in);

std::string config_to_json(const ClassifierConfig& cfg, const std::string& provenance = {});
ClassifierConfig config_from_json(const std::string& text);
void save_config(const ClassifierConfig& cfg, const std::filesystem::path& path,
                 const std::string& provenance = {});
ClassifierConfig load_config(const std::filesystem::path& path);

}  // namespace actipipe::classifier
