#pragma once

// Annotated synthetic accelerometer sessions. A harmonic-plus-noise gait
// model stands in for recorded subjects: the classifier only sees SMA and
// median frequency, so matching those feature distributions is the goal.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "actipipe/calibration.hpp"
#include "actipipe/classifier.hpp"
#include "actipipe/error.hpp"
#include "actipipe/types.hpp"
#include "actipipe/wire.hpp"

namespace actipipe::synth {

using classifier::ActivityLabel;

inline constexpr double kRangeG = 6.0;  // accelerometer full scale, +/-

struct ActivityProfile {
    ActivityLabel label = ActivityLabel::Rest;
    double fundamental_hz = 1.0;
    /// harmonics[axis][k] is the amplitude in g of harmonic k+1 on that axis.
    std::array<std::array<double, 3>, 3> harmonics{};
    double noise_sigma_g = 0.03;
    Vec3 gravity{0.0, 0.0, 1.0};  // unit vector, +z when upright
    double jitter_fraction = 0.05;

    static ActivityProfile rest();
    static ActivityProfile walk();
    static ActivityProfile run();
    static ActivityProfile for_label(ActivityLabel l);

    /// Multiplies every harmonic amplitude by `factor`.
    ActivityProfile scaled(double factor) const;
};

enum class SynthErrorKind { InvalidProfile, InvalidProtocol };

const char* to_string(SynthErrorKind kind);

class SynthError : public Error {
public:
    SynthError(SynthErrorKind kind, const std::string& detail)
        : Error("synth", to_string(kind), detail), kind_(kind) {}
    SynthErrorKind kind() const noexcept { return kind_; }

private:
    SynthErrorKind kind_;
};

void validate(const ActivityProfile& p);

/// Deterministic given seed: gravity projection + jittered harmonics +
/// Gaussian noise, clamped to the +/-6 g range. Returns samples in g.
std::vector<Vec3> generate_activity(const ActivityProfile& profile, double duration_s, double fs_hz,
                                    std::uint64_t seed);

struct Annotation {
    std::uint32_t start_ms = 0;  // inclusive
    std::uint32_t end_ms = 0;    // exclusive
    ActivityLabel label = ActivityLabel::Rest;

    friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct ProtocolStep {
    ActivityProfile profile;
    double duration_s = 0.0;
};

struct AnnotatedSession {
    double fs_hz = 50.0;
    std::vector<TimedSample> samples;  // g units
    std::vector<Annotation> annotations;
};

/// Five minutes each of rest, walk, run.
std::vector<ProtocolStep> default_protocol();

/// Parses "default" or a comma list of `activity[@fundamental_hz]:seconds`,
/// e.g. "rest:60,walk@2.8:120,run:120".
std::vector<ProtocolStep> parse_protocol(const std::string& text);

AnnotatedSession generate_session(std::span<const ProtocolStep> protocol, double fs_hz,
                                  std::uint64_t seed);

/// Converts to millivolts through `model` and rounds to whole mV as a node
/// would report them.
wire::RawSampleStream to_millivolt_stream(const AnnotatedSession& s,
                                          const calibration::CalibrationModel& model,
                                          std::uint16_t node_id = 1);
std::vector<wire::SensorPacket> to_packets(const AnnotatedSession& s,
                                           const calibration::CalibrationModel& model,
                                           std::uint16_t node_id = 1);
wire::RawSampleStream to_g_stream(const AnnotatedSession& s);

/// Still device held upright then inverted, in millivolts.
std::pair<wire::RawSampleStream, wire::RawSampleStream> generate_calibration_postures(
    const calibration::CalibrationModel& truth, double duration_s, double fs_hz, double noise_mv,
    std::uint64_t seed);

void write_annotations(std::ostream& out, std::span<const Annotation> annotations);
std::vector<Annotation> read_annotations(std::istream& in);
std::vector<Annotation> read_annotations(const std::filesystem::path& path);

/// Describes a multi-session corpus of rest + repeated walk/run segments.
struct CorpusOptions {
    std::size_t sessions = 10;
    std::uint64_t first_seed = 1;
    /// Total walk/run pairs spread over the sessions as evenly as possible.
    std::size_t walk_run_pairs = 10;
    double segment_s = 300.0;
    bool leading_rest = true;
    ActivityProfile rest = ActivityProfile::rest();
    ActivityProfile walk = ActivityProfile::walk();
    ActivityProfile run = ActivityProfile::run();
    /// Per-segment amplitude factor drawn uniformly from [1 - s, 1 + s].
    double amplitude_spread = 0.0;
    /// Per-segment fundamental factor drawn uniformly from [1 - s, 1 + s].
    double fundamental_spread = 0.0;
    double fs_hz = 50.0;
};

std::vector<AnnotatedSession> build_corpus(const CorpusOptions& opts);

/// Default profiles, 24 walk/run pairs over 10 sessions, 30% amplitude and
/// 10% fundamental spread between segments. Seeds 101.. form the bundled
/// training corpus behind ClassifierConfig::defaults().
CorpusOptions reference_corpus(std::uint64_t first_seed);

/// Walk amplitudes doubled and run amplitudes cut to 0.8 so the SMA ranges
/// of the two classes overlap; the median frequency has to decide.
CorpusOptions overlap_corpus(std::uint64_t first_seed);

/// Default profiles with no stride jitter and no per-segment spread.
CorpusOptions separated_corpus(std::uint64_t first_seed);

}  // namespace actipipe::synth
