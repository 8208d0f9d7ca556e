#pragma once

// Scoring of per-window decisions against annotated truth intervals.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "actipipe/classifier.hpp"
#include "actipipe/error.hpp"
#include "actipipe/synth.hpp"

namespace actipipe::eval {

using classifier::ActivityLabel;
using classifier::kLabelCount;

struct ActivityStats {
    std::size_t n_t = 0;  // annotated segments with at least one scored window
    std::size_t d_t = 0;  // segments whose majority label matches the truth
    std::optional<double> fm_min_hz;
    std::optional<double> fm_max_hz;
};

struct EvalReport {
    /// confusion[truth][predicted], indexed by classifier::index().
    std::array<std::array<std::size_t, kLabelCount>, kLabelCount> confusion{};
    std::size_t scored_windows = 0;
    std::size_t dropped_windows = 0;  // straddling a boundary or outside every interval
    std::size_t warmup_windows = 0;   // excluded at segment starts
    std::optional<double> accuracy;   // undefined when nothing was scored

    std::array<ActivityStats, 3> activity{};  // Rest, Walk, Run

    std::optional<double> rest_vs_movement_accuracy;  // window level
    std::size_t rest_movement_windows_correct = 0;
    std::size_t rest_movement_segments = 0;
    std::size_t rest_movement_segments_correct = 0;

    const ActivityStats& stats(ActivityLabel l) const { return activity.at(classifier::index(l)); }
    ActivityStats& stats(ActivityLabel l) { return activity.at(classifier::index(l)); }

    /// (D_walk + D_run) / (N_walk + N_run); undefined with no movement segments.
    std::optional<double> walk_run_detection_rate() const;
    std::optional<double> detection_rate(ActivityLabel l) const;
};

struct EvalOptions {
    std::uint32_t window_ms = 1000;
    /// Windows at the start of each annotated segment left out of scoring.
    std::size_t warmup_windows = 0;
};

enum class EvalErrorKind { NoOverlap };

class EvalError : public Error {
public:
    explicit EvalError(const std::string& detail) : Error("eval", "NoOverlap", detail) {}
    EvalErrorKind kind() const noexcept { return EvalErrorKind::NoOverlap; }
};

/// Window-level confusion plus segment-level majority vote. A segment counts
/// as detected when its true label strictly out-votes every other label.
/// Each segment's median frequency is the median of its windows' fm values;
/// fm min/max range over those per-segment medians.
EvalReport evaluate(std::span<const classifier::Decision> decisions,
                    std::span<const synth::Annotation> annotations, const EvalOptions& opts = {});

/// Pairs each complete feature window with the label of the annotation
/// interval that fully contains it, skipping warm-up and straddling windows.
std::vector<classifier::LabeledFeature> label_features(std::span<const features::FeatureVector> feats,
                                                       std::span<const synth::Annotation> annotations,
                                                       const EvalOptions& opts = {});

/// Merges reports from independent sessions.
EvalReport merge(std::span<const EvalReport> reports);

struct ReportTable {
    std::string text;
    std::string csv;
};

/// Tab-separated table with columns Activity, N_t, D_t, f_m Min (Hz),
/// f_m Max (Hz) and rows Walk, Run, Walk+Run, followed by summary lines.
/// Frequencies print with at most two decimals, trailing zeros removed;
/// missing values print as "-".
ReportTable report_table(const EvalReport& report);

}  // namespace actipipe::eval
