#pragma once

// End-to-end streaming chain for one node:
//   millivolts -> calibration -> moving average -> high-pass -> features -> labels

#include <optional>
#include <span>
#include <vector>

#include "actipipe/calibration.hpp"
#include "actipipe/classifier.hpp"
#include "actipipe/dsp.hpp"
#include "actipipe/features.hpp"
#include "actipipe/wire.hpp"

namespace actipipe {

struct PipelineConfig {
    double fs_hz = 50.0;
    std::size_t moving_average_window = 3;
    features::FeatureConfig features{};
    classifier::ClassifierConfig classifier = classifier::ClassifierConfig::defaults();
    /// Absent means input is already in g.
    std::optional<calibration::CalibrationModel> calibration;
};

/// Calibrates (when a model is given), despikes and high-pass filters each
/// axis. The filters are primed with the first despiked sample so the
/// gravity step at stream start does not ring.
class Preprocessor {
public:
    Preprocessor(double fs_hz, std::optional<calibration::CalibrationModel> model,
                 std::size_t ma_window = 3);

    TimedSample push(const wire::RawSample& s);

private:
    std::optional<calibration::CalibrationModel> model_;
    std::array<dsp::MovingAverage, 3> ma_;
    std::array<dsp::SosFilter, 3> hpf_;
    bool primed_ = false;
};

std::vector<TimedSample> preprocess(const wire::RawSampleStream& stream, double fs_hz,
                                    const std::optional<calibration::CalibrationModel>& model,
                                    std::size_t ma_window = 3);

class Pipeline {
public:
    explicit Pipeline(PipelineConfig cfg);

    /// Returns a decision whenever a decision window closes.
    std::optional<classifier::Decision> push(const wire::RawSample& s);
    /// Last feature vector produced by push().
    const std::optional<features::FeatureVector>& last_feature() const { return last_feature_; }

private:
    PipelineConfig cfg_;
    Preprocessor pre_;
    features::FeatureExtractor fx_;
    std::optional<features::FeatureVector> last_feature_;
};

struct PipelineResult {
    std::vector<features::FeatureVector> features;  // complete windows only
    std::vector<classifier::Decision> decisions;
};

/// Batch run over a whole stream. The trailing partial window is dropped.
PipelineResult run_pipeline(const wire::RawSampleStream& stream, const PipelineConfig& cfg);

}  // namespace actipipe
