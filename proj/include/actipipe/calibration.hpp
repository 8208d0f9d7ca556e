#pragma once

// Linear millivolt-to-g calibration from upright / inverted reference postures.

#include <filesystem>
#include <string>

#include "actipipe/error.hpp"
#include "actipipe/types.hpp"
#include "actipipe/wire.hpp"

namespace actipipe::calibration {

/// Nominal accelerometer sensitivity.
inline constexpr double kNominalScaleMvPerG = 200.0;

struct AxisCalibration {
    double offset_mv = 1650.0;  // reading at 0 g
    double scale_mv_per_g = kNominalScaleMvPerG;
};

struct FitMetadata {
    std::size_t upright_samples = 0;
    std::size_t inverted_samples = 0;
    std::uint32_t upright_start_ms = 0;
    std::uint32_t upright_end_ms = 0;
    std::uint32_t inverted_start_ms = 0;
    std::uint32_t inverted_end_ms = 0;
    std::size_t gravity_axis = kZ;
};

/// Immutable after fit; safe to share across threads.
struct CalibrationModel {
    std::array<AxisCalibration, 3> axes{};
    Vec3 fit_residual_mv{};
    FitMetadata meta{};

    /// Model with nominal 1650 mV offset and 200 mV/g on every axis.
    static CalibrationModel nominal();
};

enum class CalibrationErrorKind { TooShort, NotStill, DegenerateFit, InvalidModel };

const char* to_string(CalibrationErrorKind kind);

class CalibrationError : public Error {
public:
    CalibrationError(CalibrationErrorKind kind, const std::string& detail)
        : Error("calibration", to_string(kind), detail), kind_(kind) {}
    CalibrationErrorKind kind() const noexcept { return kind_; }

private:
    CalibrationErrorKind kind_;
};

struct FitOptions {
    double fs_hz = 50.0;
    double min_duration_s = 2.0;
    /// Per-axis sample standard deviation above this means the device moved.
    double stillness_gate_mv = 15.0;
    /// |v+ - v-| below this on the gravity axis is rejected.
    double degenerate_span_mv = 10.0;
};

/// Fits offsets and scales from a window held upright (+1 g on the gravity
/// axis) and one held inverted (-1 g). The gravity axis is the one with the
/// largest upright/inverted difference; the other axes read 0 g in both
/// postures and inherit the gravity axis scale.
CalibrationModel fit_calibration(const wire::RawSampleStream& upright,
                                 const wire::RawSampleStream& inverted,
                                 const FitOptions& opts = {});

/// g = (mv - offset) / scale, per axis.
Vec3 apply_calibration(const CalibrationModel& model, const Vec3& mv);

/// mv = offset + g * scale, per axis.
Vec3 to_millivolts(const CalibrationModel& model, const Vec3& g);

void validate(const CalibrationModel& model);

std::string model_to_json(const CalibrationModel& m);
/// Throws CalibrationError{InvalidModel} on malformed or invalid documents.
CalibrationModel model_from_json(const std::string& text);

void save_model(const CalibrationModel& m, const std::filesystem::path& path);
CalibrationModel load_model(const std::filesystem::path& path);

}  // namespace actipipe::calibration
