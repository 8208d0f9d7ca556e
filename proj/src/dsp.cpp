#include "actipipe/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>

namespace actipipe::dsp {

namespace {

// FFTW planner calls are not thread-safe.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

// Elliptic high-pass, order 7, fs 50 Hz, passband edge 0.5 Hz, 0.5 dB ripple,
// 40 dB stopband. Second-order sections {b0, b1, b2, a1, a2} as produced by a
// reference filter-design tool; the overall gain is folded into section 0.
constexpr double kHpf50[4][5] = {
    {0.8971401921118527, -0.8971401921118527, 0.0, -0.8638455050430203, 0.0},
    {1.0, -1.9986400512070623, 0.9999999999999998, -1.9349147027208444, 0.9420251409387792},
    {1.0, -1.9970926394962356, 1.0000000000000002, -1.9843709467278032, 0.9887667672965991},
    {1.0, -1.9965472100797084, 1.0000000000000002, -1.9940821702650529, 0.9979974163128176},
};

}  // namespace

const char* to_string(DspErrorKind kind) {
    switch (kind) {
        case DspErrorKind::InvalidWindow: return "InvalidWindow";
        case DspErrorKind::UnsupportedRate: return "UnsupportedRate";
        case DspErrorKind::SignalTooShort: return "SignalTooShort";
        case DspErrorKind::ZeroPower: return "ZeroPower";
    }
    return "Unknown";
}

// ---- Moving average ------------------------------------------------------

MovingAverage::MovingAverage(std::size_t window) {
    if (window == 0) throw DspError(DspErrorKind::InvalidWindow, "window must be >= 1");
    ring_.assign(window, 0.0);
}

double MovingAverage::push(double x) {
    ring_[head_] = x;
    head_ = (head_ + 1) % ring_.size();
    if (filled_ < ring_.size()) ++filled_;
    // Summed oldest-to-newest so streaming and batch agree bit for bit.
    double sum = 0.0;
    const std::size_t start = (head_ + ring_.size() - filled_) % ring_.size();
    for (std::size_t i = 0; i < filled_; ++i) sum += ring_[(start + i) % ring_.size()];
    return sum / static_cast<double>(filled_);
}

void MovingAverage::reset() {
    std::fill(ring_.begin(), ring_.end(), 0.0);
    head_ = 0;
    filled_ = 0;
}

std::vector<double> moving_average(std::span<const double> signal, std::size_t window) {
    MovingAverage ma(window);
    std::vector<double> out;
    out.reserve(signal.size());
    for (double x : signal) out.push_back(ma.push(x));
    return out;
}

// ---- IIR -----------------------------------------------------------------

double BiquadSection::pole_radius() const {
    // Roots of z^2 + a1 z + a2.
    const double disc = a1 * a1 - 4.0 * a2;
    if (disc >= 0.0) {
        const double r = std::sqrt(disc);
        return std::max(std::abs((-a1 + r) / 2.0), std::abs((-a1 - r) / 2.0));
    }
    return std::sqrt(a2);  // complex pair, |z|^2 = a2
}

std::complex<double> BiquadSection::response(double omega) const {
    const std::complex<double> z1 = std::polar(1.0, -omega);
    const std::complex<double> z2 = z1 * z1;
    return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
}

SosFilter::SosFilter(std::vector<BiquadSection> sections, double gain, int order)
    : sections_(std::move(sections)), gain_(gain), order_(order) {}

void SosFilter::process(std::span<double> signal) {
    for (double& x : signal) x = process(x);
}

void SosFilter::reset() {
    for (auto& s : sections_) s.s1 = s.s2 = 0.0;
}

void SosFilter::prime(double x0) {
    double x = gain_ * x0;
    for (auto& s : sections_) {
        const double y = s.dc_gain() * x;
        s.s2 = s.b2 * x - s.a2 * y;
        s.s1 = y - s.b0 * x;
        x = y;
    }
}

std::complex<double> SosFilter::response(double freq_hz, double fs_hz) const {
    const double omega = 2.0 * std::numbers::pi * freq_hz / fs_hz;
    std::complex<double> h = gain_;
    for (const auto& s : sections_) h *= s.response(omega);
    return h;
}

double SosFilter::magnitude_db(double freq_hz, double fs_hz) const {
    return 20.0 * std::log10(std::abs(response(freq_hz, fs_hz)));
}

bool SosFilter::stable() const {
    return std::all_of(sections_.begin(), sections_.end(),
                       [](const BiquadSection& s) { return s.pole_radius() < 1.0; });
}

SosFilter hpf_coefficients(double fs_hz) {
    if (fs_hz != 50.0) {
        throw DspError(DspErrorKind::UnsupportedRate,
                       "high-pass design is only shipped for 50 Hz, got " + std::to_string(fs_hz));
    }
    std::vector<BiquadSection> sections;
    for (const auto& c : kHpf50) {
        BiquadSection s;
        s.b0 = c[0];
        s.b1 = c[1];
        s.b2 = c[2];
        s.a1 = c[3];
        s.a2 = c[4];
        sections.push_back(s);
    }
    return SosFilter(std::move(sections), 1.0, 7);
}

std::vector<double> filter_apply(SosFilter& filter, std::span<const double> signal) {
    std::vector<double> out(signal.begin(), signal.end());
    filter.process(std::span<double>(out));
    return out;
}

// ---- Welch ---------------------------------------------------------------

struct WelchEstimator::Impl {
    std::size_t n = 0;
    double* in = nullptr;
    fftw_complex* out = nullptr;
    fftw_plan plan = nullptr;
    std::vector<double> window;
    double window_power = 0.0;  // sum of w^2
    std::vector<double> accum;

    explicit Impl(std::size_t len, Window kind) : n(len) {
        std::lock_guard<std::mutex> lock(planner_mutex());
        in = fftw_alloc_real(n);
        out = fftw_alloc_complex(n / 2 + 1);
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
        window.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            // Periodic Hann, the usual choice for spectral analysis.
            window[i] = kind == Window::Hann
                            ? 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                                   static_cast<double>(n))
                            : 1.0;
        }
        window_power = std::inner_product(window.begin(), window.end(), window.begin(), 0.0);
    }

    ~Impl() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
        fftw_free(in);
        fftw_free(out);
    }
};

WelchEstimator::WelchEstimator(double fs_hz, WelchOptions opts) : fs_(fs_hz), opts_(opts) {
    if (opts_.segment_len < 2) throw DspError(DspErrorKind::InvalidWindow, "segment_len must be >= 2");
    if (!(opts_.overlap >= 0.0 && opts_.overlap < 1.0)) {
        throw DspError(DspErrorKind::InvalidWindow, "overlap must lie in [0, 1)");
    }
    impl_ = std::make_unique<Impl>(opts_.segment_len, opts_.window);
}

WelchEstimator::~WelchEstimator() = default;
WelchEstimator::WelchEstimator(WelchEstimator&&) noexcept = default;
WelchEstimator& WelchEstimator::operator=(WelchEstimator&&) noexcept = default;

SpectralDensity WelchEstimator::estimate(std::span<const double> signal) {
    SpectralDensity out;
    estimate(signal, out);
    return out;
}

void WelchEstimator::estimate(std::span<const double> signal, SpectralDensity& psd) {
    const std::size_t n = opts_.segment_len;
    if (signal.size() < n) {
        throw DspError(DspErrorKind::SignalTooShort, "signal has " + std::to_string(signal.size()) +
                                                         " samples, segment needs " + std::to_string(n));
    }
    const auto overlap_samples = static_cast<std::size_t>(std::floor(opts_.overlap * static_cast<double>(n)));
    const std::size_t step = n - overlap_samples;
    const std::size_t segments = 1 + (signal.size() - n) / step;
    const std::size_t bins = n / 2 + 1;

    Impl& im = *impl_;
    im.accum.assign(bins, 0.0);
    for (std::size_t seg = 0; seg < segments; ++seg) {
        const double* src = signal.data() + seg * step;
        for (std::size_t i = 0; i < n; ++i) im.in[i] = src[i] * im.window[i];
        fftw_execute(im.plan);
        for (std::size_t k = 0; k < bins; ++k) {
            im.accum[k] += im.out[k][0] * im.out[k][0] + im.out[k][1] * im.out[k][1];
        }
    }

    const double norm = 1.0 / (fs_ * im.window_power * static_cast<double>(segments));
    const bool even = n % 2 == 0;
    psd.pxx.resize(bins);
    psd.freqs_hz.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        double v = im.accum[k] * norm;
        const bool unpaired = k == 0 || (even && k == bins - 1);
        if (!unpaired) v *= 2.0;
        psd.pxx[k] = v;
        psd.freqs_hz[k] = static_cast<double>(k) * fs_ / static_cast<double>(n);
    }
    psd.fs_hz = fs_;
    psd.nfft = n;
    psd.segment_len = n;
    psd.step = step;
    psd.segments = segments;
}

SpectralDensity welch_psd(std::span<const double> signal, double fs_hz, const WelchOptions& opts) {
    if (signal.size() < opts.segment_len) {
        throw DspError(DspErrorKind::SignalTooShort,
                       "signal has " + std::to_string(signal.size()) + " samples, segment needs " +
                           std::to_string(opts.segment_len));
    }
    WelchEstimator est(fs_hz, opts);
    return est.estimate(signal);
}

double average_power(const SpectralDensity& psd) {
    if (psd.pxx.empty()) return 0.0;
    const double sum = std::accumulate(psd.pxx.begin(), psd.pxx.end(), 0.0);
    return psd.fs_hz * sum / static_cast<double>(psd.pxx.size());
}

double median_frequency(const SpectralDensity& psd) {
    const std::size_t bins = psd.pxx.size();
    if (bins < 2) throw DspError(DspErrorKind::ZeroPower, "spectrum has fewer than two bins");
    const double df = psd.bin_width();

    double total = 0.0;
    for (std::size_t k = 0; k + 1 < bins; ++k) total += 0.5 * (psd.pxx[k] + psd.pxx[k + 1]);
    if (!(total > 0.0)) throw DspError(DspErrorKind::ZeroPower, "spectrum has zero area");

    // Areas are kept in units of df. Inside the crossing bin the PSD is the
    // line p0 + (p1 - p0) t, so the area up to t is p0 t + (p1 - p0) t^2 / 2.
    // Solve for the t that reaches the remaining half-area r, in the form
    // 2r / (b + sqrt(b^2 + 4ar)) which stays stable when the slope is zero.
    const double half = 0.5 * total;
    double cum = 0.0;
    for (std::size_t k = 0; k + 1 < bins; ++k) {
        const double p0 = psd.pxx[k], p1 = psd.pxx[k + 1];
        const double area = 0.5 * (p0 + p1);
        if (cum + area >= half && area > 0.0) {
            const double r = half - cum;
            double t = 0.0;
            if (r > 0.0) {
                const double a = 0.5 * (p1 - p0);
                t = 2.0 * r / (p0 + std::sqrt(std::max(0.0, p0 * p0 + 4.0 * a * r)));
            }
            return (static_cast<double>(k) + std::clamp(t, 0.0, 1.0)) * df;
        }
        cum += area;
    }
    return static_cast<double>(bins - 1) * df;
}

}  // namespace actipipe::dsp
