#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "actipipe/dsp.hpp"
#include "oracles.hpp"

using namespace actipipe;
using namespace actipipe::dsp;

namespace {

constexpr double kFs = 50.0;
constexpr double kPi = std::numbers::pi;

std::vector<double> sine(double f, double amp, std::size_t n, double fs = kFs, double phase = 0.0) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2 * kPi * f * static_cast<double>(i) / fs + phase);
    return x;
}

std::vector<double> white(std::size_t n, std::uint64_t seed, double sigma = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, sigma);
    std::vector<double> x(n);
    for (auto& v : x) v = nd(rng);
    return x;
}

SpectralDensity make_psd(std::vector<double> pxx, double fs = kFs) {
    SpectralDensity p;
    p.nfft = 2 * (pxx.size() - 1);
    p.fs_hz = fs;
    p.segment_len = p.nfft;
    for (std::size_t k = 0; k < pxx.size(); ++k) p.freqs_hz.push_back(static_cast<double>(k) * fs / static_cast<double>(p.nfft));
    p.pxx = std::move(pxx);
    return p;
}

}  // namespace

// ---- moving average ------------------------------------------------------

TEST(MovingAverage, Examples) {
    const std::vector<double> x{1, 2, 3, 4};
    EXPECT_EQ(moving_average(x, 3), (std::vector<double>{1, 1.5, 2, 3}));
    const std::vector<double> c(10, 2.5);
    EXPECT_EQ(moving_average(c, 3), c);
}

TEST(MovingAverage, ImpulseSpreadsOverThreeSamples) {
    std::vector<double> x(8, 0.0);
    x[3] = 1.0;
    const auto y = moving_average(x, 3);
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_DOUBLE_EQ(y[i], (i >= 3 && i <= 5) ? 1.0 / 3.0 : 0.0);
}

TEST(MovingAverage, ZeroWindowRejected) {
    try {
        MovingAverage ma(0);
        FAIL();
    } catch (const DspError& e) {
        EXPECT_EQ(e.kind(), DspErrorKind::InvalidWindow);
    }
}

TEST(MovingAverage, StreamingMatchesBatchAndLengthPreserved) {
    const auto x = white(1000, 1);
    for (std::size_t w : {1u, 2u, 3u, 7u}) {
        const auto batch = moving_average(x, w);
        ASSERT_EQ(batch.size(), x.size());
        MovingAverage ma(w);
        for (std::size_t i = 0; i < x.size(); ++i) ASSERT_EQ(ma.push(x[i]), batch[i]);
    }
}

TEST(MovingAverage, WindowOneIsIdentity) {
    const auto x = white(100, 2);
    EXPECT_EQ(moving_average(x, 1), x);
}

// ---- high-pass -----------------------------------------------------------

TEST(Hpf, ShapeAndStability) {
    const auto f = hpf_coefficients(kFs);
    EXPECT_EQ(f.sections().size(), 4u);
    EXPECT_EQ(f.order(), 7);
    EXPECT_GE(f.sections().size() * 2, static_cast<std::size_t>(f.order()));
    EXPECT_TRUE(f.stable());
    for (const auto& s : f.sections()) EXPECT_LT(s.pole_radius(), 1.0);
    // One first-order section written as a degenerate biquad.
    const auto& first = f.sections().front();
    EXPECT_EQ(first.b2, 0.0);
    EXPECT_EQ(first.a2, 0.0);
}

TEST(Hpf, PoleRadiusMatchesRootFinding) {
    // Independent check: complex roots of z^2 + a1 z + a2 via std::sqrt on complex.
    for (const auto& s : hpf_coefficients(kFs).sections()) {
        const std::complex<double> disc = std::sqrt(std::complex<double>(s.a1 * s.a1 - 4 * s.a2, 0.0));
        const double r = std::max(std::abs((-s.a1 + disc) / 2.0), std::abs((-s.a1 - disc) / 2.0));
        EXPECT_NEAR(s.pole_radius(), r, 1e-12);
    }
}

TEST(Hpf, FrequencyResponseDesignPoints) {
    const auto f = hpf_coefficients(kFs);
    EXPECT_LE(f.magnitude_db(0.1, kFs), -40.0);
    EXPECT_NEAR(f.magnitude_db(5.0, kFs), 0.0, 0.5);
    EXPECT_NEAR(f.magnitude_db(0.5, kFs), -0.5, 1e-6);  // passband edge sits on the ripple floor
    for (double fr = 0.6; fr <= 25.0; fr += 0.01) ASSERT_GT(f.magnitude_db(fr, kFs), -3.0) << fr;
    for (double fr = 1.0; fr <= 24.0; fr += 0.01) {
        const double db = f.magnitude_db(fr, kFs);
        ASSERT_LE(db, 0.5) << fr;
        ASSERT_GE(db, -0.5) << fr;
    }
    for (double fr = 0.0; fr <= 0.3; fr += 0.005) ASSERT_LE(f.magnitude_db(fr, kFs), -40.0) << fr;
}

TEST(Hpf, ResponseMatchesDirectPolynomialEvaluation) {
    const auto f = hpf_coefficients(kFs);
    for (double fr : {0.1, 0.5, 1.0, 2.7, 5.0, 12.5, 24.9}) {
        const std::complex<double> z = std::polar(1.0, 2 * kPi * fr / kFs);
        std::complex<double> h = f.gain();
        for (const auto& s : f.sections()) {
            h *= (s.b0 * z * z + s.b1 * z + s.b2) / (z * z + s.a1 * z + s.a2);
        }
        EXPECT_NEAR(std::abs(f.response(fr, kFs)), std::abs(h), 1e-12);
    }
}

TEST(Hpf, UnsupportedRate) {
    try {
        hpf_coefficients(44.1);
        FAIL();
    } catch (const DspError& e) {
        EXPECT_EQ(e.kind(), DspErrorKind::UnsupportedRate);
        EXPECT_EQ(e.name(), "UnsupportedRate");
    }
}

TEST(Hpf, ZeroInZeroOut) {
    auto f = hpf_coefficients(kFs);
    const std::vector<double> z(5000, 0.0);
    for (double y : filter_apply(f, z)) ASSERT_EQ(y, 0.0);
}

TEST(Hpf, StepResponseSettlesWithinFrozenTime) {
    // Measured once on the shipped coefficients: |y| stays below 0.01 from
    // sample 1160 onward (23.2 s at 50 Hz). Guards against coefficient drift.
    constexpr std::size_t kSettleSamples = 1160;
    auto f = hpf_coefficients(kFs);
    const std::vector<double> step(20000, 1.0);
    const auto y = filter_apply(f, step);
    std::size_t last_big = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (std::abs(y[i]) >= 0.01) last_big = i + 1;
    EXPECT_EQ(last_big, kSettleSamples);
    EXPECT_LT(std::abs(y.back()), 1e-9);
}

TEST(Hpf, PrimingRemovesStepTransient) {
    auto f = hpf_coefficients(kFs);
    f.prime(1.0);
    for (int i = 0; i < 5000; ++i) ASSERT_NEAR(f.process(1.0), 0.0, 1e-12);
}

TEST(Hpf, FiveHertzSineWithinSixPercent) {
    auto f = hpf_coefficients(kFs);
    const auto y = filter_apply(f, sine(5.0, 1.0, 50 * 200));
    const std::span<const double> tail(y.data() + 50 * 100, 50 * 100);
    const double amp = oracle::sine_amplitude(tail, 5.0, kFs);
    EXPECT_NEAR(amp, 1.0, 0.06);
    EXPECT_NEAR(20 * std::log10(amp), f.magnitude_db(5.0, kFs), 0.05);
}

TEST(Hpf, Linearity) {
    const auto x = white(5000, 3, 4.0), v = white(5000, 4, 4.0);
    const double a = 1.7, b = -0.4;
    std::vector<double> mix(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) mix[i] = a * x[i] + b * v[i];
    auto f1 = hpf_coefficients(kFs), f2 = hpf_coefficients(kFs), f3 = hpf_coefficients(kFs);
    const auto yx = filter_apply(f1, x), yv = filter_apply(f2, v), ym = filter_apply(f3, mix);
    for (std::size_t i = 0; i < x.size(); ++i) ASSERT_NEAR(ym[i], a * yx[i] + b * yv[i], 1e-9);
}

TEST(Hpf, ChunkedStreamingMatchesBatch) {
    const auto x = white(10000, 5, 2.0);
    auto batch_f = hpf_coefficients(kFs);
    const auto batch = filter_apply(batch_f, x);
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<std::size_t> chunk(1, 700);
    auto f = hpf_coefficients(kFs);
    std::vector<double> streamed;
    for (std::size_t pos = 0; pos < x.size();) {
        const std::size_t n = std::min(chunk(rng), x.size() - pos);
        const auto part = filter_apply(f, std::span<const double>(x.data() + pos, n));
        streamed.insert(streamed.end(), part.begin(), part.end());
        pos += n;
    }
    ASSERT_EQ(streamed.size(), batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) ASSERT_NEAR(streamed[i], batch[i], 1e-12);
}

TEST(Hpf, BoundedOverMillionSamplesAtSixteenG) {
    auto f = hpf_coefficients(kFs);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-16.0, 16.0);
    double peak = 0.0;
    for (int i = 0; i < 1'000'000; ++i) peak = std::max(peak, std::abs(f.process(u(rng))));
    EXPECT_TRUE(std::isfinite(peak));
    EXPECT_LT(peak, 64.0);
}

// ---- Welch ---------------------------------------------------------------

TEST(Welch, GridInvariants) {
    const auto p = welch_psd(white(1000, 9), kFs);
    EXPECT_EQ(p.pxx.size(), 65u);
    EXPECT_EQ(p.freqs_hz.front(), 0.0);
    EXPECT_DOUBLE_EQ(p.freqs_hz.back(), kFs / 2);
    for (std::size_t k = 1; k < p.freqs_hz.size(); ++k) EXPECT_NEAR(p.freqs_hz[k] - p.freqs_hz[k - 1], kFs / 128, 1e-12);
    for (double v : p.pxx) EXPECT_GE(v, 0.0);
    EXPECT_EQ(p.step, 64u);
    EXPECT_EQ(p.segments, 1 + (1000 - 128) / 64u);
}

TEST(Welch, ZeroSignalZeroPsd) {
    const auto p = welch_psd(std::vector<double>(256, 0.0), kFs);
    for (double v : p.pxx) EXPECT_EQ(v, 0.0);
}

TEST(Welch, TooShort) {
    try {
        welch_psd(std::vector<double>(100, 1.0), kFs);
        FAIL();
    } catch (const DspError& e) {
        EXPECT_EQ(e.kind(), DspErrorKind::SignalTooShort);
    }
}

TEST(Welch, RectangularSingleSegmentEqualsPeriodogram) {
    WelchOptions opts{128, 0.0, Window::Rectangular};
    const std::vector<double> w(128, 1.0);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto x = white(128, 100 + seed, 1.0 + static_cast<double>(seed));
        const auto p = welch_psd(x, kFs, opts);
        const auto ref = oracle::periodogram(x, w, kFs);
        ASSERT_EQ(p.pxx.size(), ref.size());
        for (std::size_t k = 0; k < ref.size(); ++k) ASSERT_NEAR(p.pxx[k], ref[k], 1e-10 * std::abs(ref[k]) + 1e-300);
    }
}

TEST(Welch, HannSegmentsAverageOraclePeriodograms) {
    const auto x = white(512, 12);
    std::vector<double> w(128);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.5 - 0.5 * std::cos(2 * kPi * static_cast<double>(i) / 128.0);
    const auto p = welch_psd(x, kFs);
    std::vector<double> avg(65, 0.0);
    std::size_t segs = 0;
    for (std::size_t start = 0; start + 128 <= x.size(); start += 64, ++segs) {
        const auto r = oracle::periodogram(std::span<const double>(x.data() + start, 128), w, kFs);
        for (std::size_t k = 0; k < r.size(); ++k) avg[k] += r[k];
    }
    for (auto& v : avg) v /= static_cast<double>(segs);
    for (std::size_t k = 0; k < avg.size(); ++k) ASSERT_NEAR(p.pxx[k], avg[k], 1e-10 * avg[k]);
}

TEST(Welch, OnGridToneArgMax) {
    const double f0 = 25.0 / 64.0 * 25.0;  // bin 50 of 128 at 50 Hz
    const auto p = welch_psd(sine(f0, 1.0, 1024), kFs);
    const auto k = static_cast<std::size_t>(std::max_element(p.pxx.begin(), p.pxx.end()) - p.pxx.begin());
    EXPECT_DOUBLE_EQ(p.freqs_hz[k], f0);
}

TEST(Welch, ParsevalWhiteNoise) {
    const auto x = white(50 * 60, 13);
    double ms = 0.0;
    for (double v : x) ms += v * v;
    ms /= static_cast<double>(x.size());
    const auto p = welch_psd(x, kFs);
    double area = 0.0;
    for (double v : p.pxx) area += v * p.bin_width();
    EXPECT_NEAR(area / ms, 1.0, 0.1);
}

TEST(Welch, EstimatorReuseIsDeterministic) {
    WelchEstimator est(kFs);
    const auto x = white(256, 14);
    const auto a = est.estimate(x);
    est.estimate(white(256, 15));
    const auto b = est.estimate(x);
    EXPECT_EQ(a.pxx, b.pxx);
}

// ---- average power -------------------------------------------------------

TEST(AveragePower, Examples) {
    EXPECT_EQ(average_power(make_psd(std::vector<double>(65, 0.0))), 0.0);
    EXPECT_DOUBLE_EQ(average_power(make_psd(std::vector<double>(65, 0.25))), kFs * 0.25);
}

TEST(AveragePower, WhiteNoiseProportionalToMeanSquare) {
    // The formula divides by the number of one-sided bins, L = nfft/2 + 1,
    // while sum(pxx)*df approximates the mean square. Hence
    // P_av / mean_square ~= nfft / L = 128/65, frozen here.
    constexpr double kRatio = 128.0 / 65.0;
    for (std::uint64_t seed : {21u, 22u, 23u}) {
        const auto x = white(50 * 60, seed, 0.5);
        double ms = 0.0;
        for (double v : x) ms += v * v;
        ms /= static_cast<double>(x.size());
        EXPECT_NEAR(average_power(welch_psd(x, kFs)) / ms, kRatio, 0.1 * kRatio);
    }
}

// ---- median frequency ----------------------------------------------------

TEST(MedianFrequency, ZeroPower) {
    try {
        median_frequency(make_psd(std::vector<double>(65, 0.0)));
        FAIL();
    } catch (const DspError& e) {
        EXPECT_EQ(e.kind(), DspErrorKind::ZeroPower);
    }
}

TEST(MedianFrequency, FlatSpectrumIsNyquistHalf) {
    EXPECT_DOUBLE_EQ(median_frequency(make_psd(std::vector<double>(65, 1.0))), kFs / 4);
}

TEST(MedianFrequency, MatchesFineGridOracle) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> pxx(65);
        for (auto& v : pxx) v = u(rng) * u(rng);
        const auto p = make_psd(pxx);
        EXPECT_NEAR(median_frequency(p), oracle::median_frequency_fine(pxx, p.bin_width()), p.bin_width() / 1000.0);
    }
}

TEST(MedianFrequency, PowerOfTwoScalingIsBitExact) {
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> ex(-60, 60);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> pxx(65);
        for (auto& v : pxx) v = u(rng);
        const double c = std::ldexp(1.0, ex(rng));
        auto scaled = pxx;
        for (auto& v : scaled) v *= c;
        ASSERT_EQ(median_frequency(make_psd(scaled)), median_frequency(make_psd(pxx)));
    }
}

TEST(MedianFrequency, ArbitraryScalingWithinRounding) {
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> u(0.0, 1.0), lc(-20.0, 20.0);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> pxx(65);
        for (auto& v : pxx) v = u(rng);
        const double c = std::exp(lc(rng));
        auto scaled = pxx;
        for (auto& v : scaled) v *= c;
        const double a = median_frequency(make_psd(pxx)), b = median_frequency(make_psd(scaled));
        ASSERT_NEAR(a, b, 1e-12 * a);
    }
}

TEST(MedianFrequency, SingleToneRecovery) {
    std::mt19937_64 rng(34);
    std::uniform_real_distribution<double> uf(1.0, 20.0), ph(0.0, 2 * kPi);
    for (int t = 0; t < 100; ++t) {
        const double f0 = uf(rng);
        auto x = sine(f0, 1.0, 256, kFs, ph(rng));
        const auto p = welch_psd(x, kFs);
        ASSERT_NEAR(median_frequency(p), f0, p.bin_width()) << f0;
    }
}

TEST(MedianFrequency, TwoEqualTonesContainment) {
    std::mt19937_64 rng(35);
    std::uniform_real_distribution<double> uf(1.0, 23.0), ph(0.0, 2 * kPi);
    for (int t = 0; t < 100; ++t) {
        double f1 = uf(rng), f2 = uf(rng);
        if (f1 > f2) std::swap(f1, f2);
        if (f2 - f1 < 1.0) f2 = std::min(24.0, f1 + 1.0);
        const auto a = sine(f1, 1.0, 1024, kFs, ph(rng)), b = sine(f2, 1.0, 1024, kFs, ph(rng));
        std::vector<double> x(a.size());
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = a[i] + b[i];
        const double fm = median_frequency(welch_psd(x, kFs));
        ASSERT_GE(fm, f1) << f1 << " " << f2;
        ASSERT_LE(fm, f2) << f1 << " " << f2;
    }
}
