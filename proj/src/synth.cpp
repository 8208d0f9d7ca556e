#include "actipipe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace actipipe::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Fixed per-axis, per-harmonic phase offsets so the axes are not in lockstep.
constexpr double kPhase[3][3] = {
    {std::numbers::pi / 2.0, 0.3, 1.1},
    {std::numbers::pi / 4.0, 0.9, 2.0},
    {0.0, std::numbers::pi / 3.0, 0.7},
};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint32_t timestamp_for(std::size_t i, double fs_hz) {
    return static_cast<std::uint32_t>(std::llround(static_cast<double>(i) * 1000.0 / fs_hz));
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    const auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

}  // namespace

const char* to_string(SynthErrorKind kind) {
    switch (kind) {
        case SynthErrorKind::InvalidProfile: return "InvalidProfile";
        case SynthErrorKind::InvalidProtocol: return "InvalidProtocol";
    }
    return "Unknown";
}

ActivityProfile ActivityProfile::rest() {
    ActivityProfile p;
    p.label = ActivityLabel::Rest;
    p.fundamental_hz = 1.0;
    p.jitter_fraction = 0.0;
    return p;
}

ActivityProfile ActivityProfile::walk() {
    ActivityProfile p;
    p.label = ActivityLabel::Walk;
    p.fundamental_hz = 2.6;
    p.harmonics = {{{0.12, 0.04, 0.0}, {0.08, 0.03, 0.0}, {0.35, 0.08, 0.03}}};
    return p;
}

ActivityProfile ActivityProfile::run() {
    ActivityProfile p;
    p.label = ActivityLabel::Run;
    p.fundamental_hz = 3.8;
    p.harmonics = {{{0.35, 0.10, 0.03}, {0.25, 0.08, 0.02}, {1.10, 0.30, 0.10}}};
    return p;
}

ActivityProfile ActivityProfile::for_label(ActivityLabel l) {
    switch (l) {
        case ActivityLabel::Walk: return walk();
        case ActivityLabel::Run: return run();
        default: return rest();
    }
}

ActivityProfile ActivityProfile::scaled(double factor) const {
    ActivityProfile p = *this;
    for (auto& axis : p.harmonics)
        for (auto& a : axis) a *= factor;
    return p;
}

void validate(const ActivityProfile& p) {
    auto fail = [](const std::string& why) { throw SynthError(SynthErrorKind::InvalidProfile, why); };
    if (!(p.fundamental_hz > 0.0 && p.fundamental_hz < 25.0)) fail("fundamental_hz must lie in (0, 25)");
    for (const auto& axis : p.harmonics)
        for (double a : axis)
            if (!(a >= 0.0)) fail("harmonic amplitudes must be >= 0");
    if (!(p.noise_sigma_g >= 0.0)) fail("noise_sigma_g must be >= 0");
    if (!(p.jitter_fraction >= 0.0 && p.jitter_fraction < 1.0)) fail("jitter_fraction must lie in [0, 1)");
    const double norm = std::hypot(p.gravity[0], p.gravity[1], p.gravity[2]);
    if (std::abs(norm - 1.0) > 1e-9) fail("gravity vector must have unit length");
}

std::vector<Vec3> generate_activity(const ActivityProfile& profile, double duration_s, double fs_hz,
                                    std::uint64_t seed) {
    validate(profile);
    if (!(duration_s > 0.0) || !(fs_hz > 0.0)) {
        throw SynthError(SynthErrorKind::InvalidProfile, "duration and sample rate must be positive");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);

    auto draw_stride_freq = [&] {
        if (profile.jitter_fraction == 0.0) return profile.fundamental_hz;
        const double z = std::clamp(unit(rng), -3.0, 3.0);
        return profile.fundamental_hz * (1.0 + profile.jitter_fraction * z);
    };

    const auto n = static_cast<std::size_t>(std::llround(duration_s * fs_hz));
    std::vector<Vec3> out(n);
    double phase = 0.0;
    double freq = draw_stride_freq();
    for (std::size_t i = 0; i < n; ++i) {
        Vec3 v = profile.gravity;
        for (std::size_t a = 0; a < 3; ++a) {
            for (std::size_t k = 0; k < 3; ++k) {
                const double amp = profile.harmonics[a][k];
                if (amp != 0.0) v[a] += amp * std::sin(static_cast<double>(k + 1) * phase + kPhase[a][k]);
            }
        }
        for (std::size_t a = 0; a < 3; ++a) {
            // Noise is drawn even at sigma 0 so the stream of jitter draws
            // does not depend on the noise setting.
            const double e = unit(rng);
            v[a] = std::clamp(v[a] + profile.noise_sigma_g * e, -kRangeG, kRangeG);
        }
        out[i] = v;

        phase += kTwoPi * freq / fs_hz;
        if (phase >= kTwoPi) {
            phase -= kTwoPi;
            freq = draw_stride_freq();
        }
    }
    return out;
}

std::vector<ProtocolStep> default_protocol() {
    return {{ActivityProfile::rest(), 300.0}, {ActivityProfile::walk(), 300.0}, {ActivityProfile::run(), 300.0}};
}

std::vector<ProtocolStep> parse_protocol(const std::string& text) {
    if (trim(text) == "default") return default_protocol();
    std::vector<ProtocolStep> steps;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            throw SynthError(SynthErrorKind::InvalidProtocol, "step '" + item + "' lacks ':seconds'");
        }
        std::string name = item.substr(0, colon);
        std::optional<double> fundamental;
        ProtocolStep step;
        try {
            if (auto at = name.find('@'); at != std::string::npos) {
                fundamental = std::stod(name.substr(at + 1));
                name = name.substr(0, at);
            }
            step.profile = ActivityProfile::for_label(classifier::parse_label(name));
            step.duration_s = std::stod(item.substr(colon + 1));
        } catch (const std::exception& e) {
            throw SynthError(SynthErrorKind::InvalidProtocol, "step '" + item + "': " + e.what());
        }
        if (fundamental) step.profile.fundamental_hz = *fundamental;
        validate(step.profile);
        if (!(step.duration_s > 0.0)) {
            throw SynthError(SynthErrorKind::InvalidProtocol, "step '" + item + "' has no duration");
        }
        steps.push_back(step);
    }
    if (steps.empty()) throw SynthError(SynthErrorKind::InvalidProtocol, "empty protocol");
    return steps;
}

AnnotatedSession generate_session(std::span<const ProtocolStep> protocol, double fs_hz, std::uint64_t seed) {
    if (protocol.empty()) throw SynthError(SynthErrorKind::InvalidProtocol, "empty protocol");
    AnnotatedSession s;
    s.fs_hz = fs_hz;
    std::size_t index = 0;
    for (std::size_t step = 0; step < protocol.size(); ++step) {
        const auto samples = generate_activity(protocol[step].profile, protocol[step].duration_s, fs_hz,
                                               splitmix64(seed * 0x100000001B3ull + step));
        Annotation ann;
        ann.start_ms = timestamp_for(index, fs_hz);
        ann.label = protocol[step].profile.label;
        for (const auto& v : samples) s.samples.push_back({timestamp_for(index++, fs_hz), v});
        ann.end_ms = timestamp_for(index, fs_hz);
        s.annotations.push_back(ann);
    }
    return s;
}

wire::RawSampleStream to_millivolt_stream(const AnnotatedSession& s,
                                          const calibration::CalibrationModel& model,
                                          std::uint16_t node_id) {
    wire::RawSampleStream out;
    out.source = wire::Source::Synthetic;
    out.units = wire::Units::Millivolts;
    out.samples.reserve(s.samples.size());
    std::uint16_t seq = 0;
    for (const auto& smp : s.samples) {
        wire::RawSample r;
        r.node_id = node_id;
        r.seq = seq++;
        r.timestamp_ms = smp.timestamp_ms;
        const Vec3 mv = calibration::to_millivolts(model, smp.g);
        for (std::size_t a = 0; a < 3; ++a) r.axes[a] = std::clamp(std::round(mv[a]), 0.0, 65535.0);
        out.samples.push_back(r);
    }
    return out;
}

std::vector<wire::SensorPacket> to_packets(const AnnotatedSession& s,
                                           const calibration::CalibrationModel& model,
                                           std::uint16_t node_id) {
    const auto stream = to_millivolt_stream(s, model, node_id);
    std::vector<wire::SensorPacket> out;
    out.reserve(stream.samples.size());
    for (const auto& r : stream.samples) {
        wire::SensorPacket p;
        p.node_id = r.node_id;
        p.seq = r.seq;
        p.timestamp_ms = r.timestamp_ms;
        p.ax_mv = static_cast<std::uint16_t>(r.axes[0]);
        p.ay_mv = static_cast<std::uint16_t>(r.axes[1]);
        p.az_mv = static_cast<std::uint16_t>(r.axes[2]);
        out.push_back(p);
    }
    return out;
}

wire::RawSampleStream to_g_stream(const AnnotatedSession& s) {
    wire::RawSampleStream out;
    out.source = wire::Source::Synthetic;
    out.units = wire::Units::G;
    out.samples.reserve(s.samples.size());
    std::uint16_t seq = 0;
    for (const auto& smp : s.samples) out.samples.push_back({1, seq++, smp.timestamp_ms, smp.g});
    return out;
}

std::pair<wire::RawSampleStream, wire::RawSampleStream> generate_calibration_postures(
    const calibration::CalibrationModel& truth, double duration_s, double fs_hz, double noise_mv,
    std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    const auto n = static_cast<std::size_t>(std::llround(duration_s * fs_hz));

    auto posture = [&](const Vec3& g, std::size_t offset) {
        wire::RawSampleStream s;
        s.source = wire::Source::Synthetic;
        s.units = wire::Units::Millivolts;
        const Vec3 mv = calibration::to_millivolts(truth, g);
        for (std::size_t i = 0; i < n; ++i) {
            wire::RawSample r;
            r.seq = static_cast<std::uint16_t>(offset + i);
            r.timestamp_ms = timestamp_for(offset + i, fs_hz);
            for (std::size_t a = 0; a < 3; ++a) r.axes[a] = mv[a] + noise_mv * noise(rng);
            s.samples.push_back(r);
        }
        return s;
    };
    auto up = posture({0.0, 0.0, 1.0}, 0);
    auto inv = posture({0.0, 0.0, -1.0}, n);
    return {std::move(up), std::move(inv)};
}

void write_annotations(std::ostream& out, std::span<const Annotation> annotations) {
    out << "start_ms,end_ms,label\n";
    for (const auto& a : annotations) out << a.start_ms << ',' << a.end_ms << ',' << to_string(a.label) << '\n';
}

std::vector<Annotation> read_annotations(std::istream& in) {
    std::vector<Annotation> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || (line_no == 1 && line.rfind("start_ms", 0) == 0)) continue;
        std::stringstream ss(line);
        std::string a, b, c;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ',')) {
            throw Error("synth", "UnparsableRow", "annotations line " + std::to_string(line_no) + ": expected 3 fields");
        }
        try {
            out.push_back({static_cast<std::uint32_t>(std::stoul(a)), static_cast<std::uint32_t>(std::stoul(b)),
                           classifier::parse_label(trim(c))});
        } catch (const std::exception& e) {
            throw Error("synth", "UnparsableRow", "annotations line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<Annotation> read_annotations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("synth", "Unreadable", "cannot open annotations file " + path.string());
    return read_annotations(in);
}

std::vector<AnnotatedSession> build_corpus(const CorpusOptions& opts) {
    std::vector<AnnotatedSession> corpus;
    corpus.reserve(opts.sessions);
    for (std::size_t s = 0; s < opts.sessions; ++s) {
        const std::uint64_t seed = opts.first_seed + s;
        std::size_t pairs = opts.walk_run_pairs / opts.sessions;
        if (s < opts.walk_run_pairs % opts.sessions) ++pairs;

        std::mt19937_64 rng(splitmix64(seed ^ 0xC0FFEEull));
        std::uniform_real_distribution<double> amp(1.0 - opts.amplitude_spread, 1.0 + opts.amplitude_spread);
        std::uniform_real_distribution<double> fund(1.0 - opts.fundamental_spread, 1.0 + opts.fundamental_spread);
        auto vary = [&](const ActivityProfile& base) {
            ActivityProfile p = base.scaled(amp(rng));
            p.fundamental_hz *= fund(rng);
            return p;
        };

        std::vector<ProtocolStep> protocol;
        if (opts.leading_rest) protocol.push_back({opts.rest, opts.segment_s});
        for (std::size_t k = 0; k < pairs; ++k) {
            protocol.push_back({vary(opts.walk), opts.segment_s});
            protocol.push_back({vary(opts.run), opts.segment_s});
        }
        corpus.push_back(generate_session(protocol, opts.fs_hz, seed));
    }
    return corpus;
}

CorpusOptions reference_corpus(std::uint64_t first_seed) {
    CorpusOptions o;
    o.first_seed = first_seed;
    o.walk_run_pairs = 24;
    o.amplitude_spread = 0.3;
    o.fundamental_spread = 0.1;
    return o;
}

CorpusOptions overlap_corpus(std::uint64_t first_seed) {
    CorpusOptions o;
    o.first_seed = first_seed;
    o.walk_run_pairs = 24;
    o.walk = ActivityProfile::walk().scaled(2.0);
    o.run = ActivityProfile::run().scaled(0.8);
    o.amplitude_spread = 0.25;
    o.fundamental_spread = 0.1;
    return o;
}

CorpusOptions separated_corpus(std::uint64_t first_seed) {
    CorpusOptions o;
    o.first_seed = first_seed;
    o.walk_run_pairs = 24;
    o.walk.jitter_fraction = 0.0;
    o.run.jitter_fraction = 0.0;
    return o;
}

}  // namespace actipipe::synth
