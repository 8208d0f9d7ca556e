#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "actipipe/calibration.hpp"
#include "actipipe/synth.hpp"

using namespace actipipe;
using namespace actipipe::calibration;

namespace {

wire::RawSampleStream constant_window(Vec3 mv, std::size_t n = 250, std::uint32_t t0 = 0) {
    wire::RawSampleStream s;
    for (std::size_t i = 0; i < n; ++i) s.samples.push_back({1, 0, t0 + static_cast<std::uint32_t>(i * 20), mv});
    return s;
}

wire::RawSampleStream noisy_window(Vec3 mean, double sigma, std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, sigma);
    wire::RawSampleStream s;
    for (std::size_t i = 0; i < n; ++i) {
        s.samples.push_back({1, 0, static_cast<std::uint32_t>(i * 20), {mean[0] + nd(rng), mean[1] + nd(rng), mean[2] + nd(rng)}});
    }
    return s;
}

CalibrationErrorKind fit_error(const wire::RawSampleStream& up, const wire::RawSampleStream& inv) {
    try {
        fit_calibration(up, inv);
    } catch (const CalibrationError& e) {
        return e.kind();
    }
    ADD_FAILURE() << "fit_calibration did not throw";
    return CalibrationErrorKind::InvalidModel;
}

}  // namespace

TEST(Calibration, NominalSensitivityExample) {
    const auto m = fit_calibration(constant_window({1650, 1650, 1850}), constant_window({1650, 1650, 1450}));
    EXPECT_DOUBLE_EQ(m.axes[kZ].offset_mv, 1650.0);
    EXPECT_DOUBLE_EQ(m.axes[kZ].scale_mv_per_g, 200.0);
    EXPECT_EQ(m.meta.gravity_axis, static_cast<std::size_t>(kZ));
    for (auto a : {kX, kY}) EXPECT_DOUBLE_EQ(m.axes[a].scale_mv_per_g, 200.0);
    for (double r : m.fit_residual_mv) EXPECT_EQ(r, 0.0);
}

TEST(Calibration, GravityAxisChosenByLargestSpan) {
    const auto m = fit_calibration(constant_window({1860, 1640, 1655}), constant_window({1440, 1660, 1645}));
    EXPECT_EQ(m.meta.gravity_axis, static_cast<std::size_t>(kX));
    EXPECT_DOUBLE_EQ(m.axes[kX].scale_mv_per_g, 210.0);
    EXPECT_DOUBLE_EQ(m.axes[kY].offset_mv, 1650.0);
    EXPECT_DOUBLE_EQ(m.axes[kZ].offset_mv, 1650.0);
}

TEST(Calibration, EqualPosturesAreDegenerate) {
    EXPECT_EQ(fit_error(constant_window({1650, 1650, 1650}), constant_window({1650, 1650, 1650})),
              CalibrationErrorKind::DegenerateFit);
    EXPECT_EQ(fit_error(constant_window({1650, 1650, 1655}), constant_window({1650, 1650, 1650})),
              CalibrationErrorKind::DegenerateFit);
}

TEST(Calibration, SwappedPosturesAreDegenerate) {
    EXPECT_EQ(fit_error(constant_window({1650, 1650, 1450}), constant_window({1650, 1650, 1850})),
              CalibrationErrorKind::DegenerateFit);
}

TEST(Calibration, ShortWindowRejected) {
    EXPECT_EQ(fit_error(constant_window({1650, 1650, 1850}, 99), constant_window({1650, 1650, 1450})),
              CalibrationErrorKind::TooShort);
    EXPECT_EQ(fit_error(constant_window({1650, 1650, 1850}), constant_window({1650, 1650, 1450}, 0)),
              CalibrationErrorKind::TooShort);
}

TEST(Calibration, MovingDeviceRejected) {
    std::mt19937_64 rng(1);
    const auto shaky = noisy_window({1650, 1650, 1850}, 40.0, 250, rng);
    EXPECT_EQ(fit_error(shaky, constant_window({1650, 1650, 1450})), CalibrationErrorKind::NotStill);
}

TEST(Calibration, StillnessGateConfigurable) {
    std::mt19937_64 rng(1);
    const auto shaky = noisy_window({1650, 1650, 1850}, 20.0, 250, rng);
    FitOptions loose;
    loose.stillness_gate_mv = 30.0;
    EXPECT_NO_THROW(fit_calibration(shaky, constant_window({1650, 1650, 1450}), loose));
}

TEST(Calibration, MonteCarloWithinThreeSigmaOverRootN) {
    // Each fitted parameter averages 2N independent readings with sigma 5 mV.
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> off(1550, 1750), sc(180, 220);
    const double sigma = 5.0;
    const std::size_t n = 250;
    const double tol = 3.0 * sigma / std::sqrt(static_cast<double>(n));
    int outside = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        const Vec3 o{off(rng), off(rng), off(rng)};
        const double s = sc(rng);
        const auto up = noisy_window({o[0], o[1], o[2] + s}, sigma, n, rng);
        const auto inv = noisy_window({o[0], o[1], o[2] - s}, sigma, n, rng);
        const auto m = fit_calibration(up, inv);
        for (std::size_t a = 0; a < 3; ++a)
            if (std::abs(m.axes[a].offset_mv - o[a]) > tol) ++outside;
        if (std::abs(m.axes[kZ].scale_mv_per_g - s) > tol) ++outside;
    }
    // 3-sigma bounds: about 0.3% of draws land outside by chance.
    EXPECT_LE(outside, trials * 4 / 100);
}

TEST(Calibration, NoiselessFitRecoversScaleExactly) {
    const double offset = 1612.0, scale = 196.0;
    const auto m = fit_calibration(constant_window({1650, 1650, offset + scale}), constant_window({1650, 1650, offset - scale}));
    EXPECT_EQ(m.axes[kZ].scale_mv_per_g, scale);
    EXPECT_EQ(m.axes[kZ].offset_mv, offset);
}

TEST(Calibration, ApplyDefinitionExamples) {
    CalibrationModel m;
    m.axes[kX] = {1600.0, 190.0};
    EXPECT_EQ(apply_calibration(m, {1600.0, 1650.0, 1650.0})[kX], 0.0);
    EXPECT_DOUBLE_EQ(apply_calibration(m, {1790.0, 1650.0, 1650.0})[kX], 1.0);
    EXPECT_DOUBLE_EQ(apply_calibration(m, {1410.0, 1650.0, 1650.0})[kX], -1.0);
}

TEST(Calibration, ApplyIsAffine) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> mv(0, 3300), frac(0, 1);
    CalibrationModel m;
    m.axes = {AxisCalibration{1640, 198}, AxisCalibration{1661, 203}, AxisCalibration{1650, 201}};
    for (int t = 0; t < 1000; ++t) {
        const Vec3 a{mv(rng), mv(rng), mv(rng)}, b{mv(rng), mv(rng), mv(rng)};
        const double w = frac(rng);
        Vec3 mix;
        for (std::size_t i = 0; i < 3; ++i) mix[i] = w * a[i] + (1 - w) * b[i];
        const auto ga = apply_calibration(m, a), gb = apply_calibration(m, b), gm = apply_calibration(m, mix);
        for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(gm[i], w * ga[i] + (1 - w) * gb[i], 1e-12);
    }
}

TEST(Calibration, ApplyInvertsToMillivolts) {
    CalibrationModel m;
    m.axes = {AxisCalibration{1640, 198}, AxisCalibration{1661, 203}, AxisCalibration{1650, 201}};
    const Vec3 g{0.3, -1.2, 2.5};
    const auto back = apply_calibration(m, to_millivolts(m, g));
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(back[i], g[i], 1e-12);
}

TEST(Calibration, FittedModelMapsPosturesToPlusMinusOneG) {
    CalibrationModel truth;
    truth.axes = {AxisCalibration{1638, 203}, AxisCalibration{1662, 203}, AxisCalibration{1647, 203}};
    auto [up, inv] = synth::generate_calibration_postures(truth, 5.0, 50.0, 5.0, 21);
    const auto m = fit_calibration(up, inv);
    auto mean_z = [&](const wire::RawSampleStream& s) {
        double acc = 0.0;
        for (const auto& smp : s.samples) acc += apply_calibration(m, smp.axes)[kZ];
        return acc / static_cast<double>(s.samples.size());
    };
    EXPECT_NEAR(mean_z(up), 1.0, 0.02);
    EXPECT_NEAR(mean_z(inv), -1.0, 0.02);
    for (std::size_t a = 0; a < 3; ++a) EXPECT_LT(m.fit_residual_mv[a], 8.0);
}

TEST(Calibration, JsonRoundTrip) {
    const auto m = fit_calibration(constant_window({1651, 1649, 1853}), constant_window({1652, 1648, 1449}, 300, 10000));
    const auto back = model_from_json(model_to_json(m));
    for (std::size_t a = 0; a < 3; ++a) {
        EXPECT_EQ(back.axes[a].offset_mv, m.axes[a].offset_mv);
        EXPECT_EQ(back.axes[a].scale_mv_per_g, m.axes[a].scale_mv_per_g);
        EXPECT_EQ(back.fit_residual_mv[a], m.fit_residual_mv[a]);
    }
    EXPECT_EQ(back.meta.inverted_samples, 300u);
    EXPECT_EQ(back.meta.inverted_start_ms, 10000u);
    EXPECT_EQ(back.meta.gravity_axis, static_cast<std::size_t>(kZ));
}

TEST(Calibration, SaveAndLoad) {
    const auto path = std::filesystem::temp_directory_path() / "actipipe_cal_test.json";
    const auto m = CalibrationModel::nominal();
    save_model(m, path);
    const auto back = load_model(path);
    EXPECT_EQ(back.axes[kZ].offset_mv, 1650.0);
    std::filesystem::remove(path);
}

TEST(Calibration, MissingFileNamesPath) {
    try {
        load_model("/nonexistent/dir/cal.json");
        FAIL();
    } catch (const CalibrationError& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/cal.json"), std::string::npos);
    }
}

TEST(Calibration, ValidateRejectsBadModels) {
    auto m = CalibrationModel::nominal();
    EXPECT_NO_THROW(validate(m));
    m.axes[kY].scale_mv_per_g = 0.0;
    EXPECT_THROW(validate(m), CalibrationError);
    m = CalibrationModel::nominal();
    m.axes[kX].offset_mv = 5000.0;
    EXPECT_THROW(validate(m), CalibrationError);
    EXPECT_THROW(model_from_json("{\"axes\": 3}"), CalibrationError);
}
