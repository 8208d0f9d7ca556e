#pragma once

// Sensor node frame format and sample-stream ingestion.
//
// Frame layout (17 bytes, little-endian):
//   [0]      magic 0xA5
//   [1..2]   node_id
//   [3..4]   seq (wraps at 2^16)
//   [5..8]   timestamp_ms since node boot
//   [9..10]  ax_mv
//   [11..12] ay_mv
//   [13..14] az_mv
//   [15..16] crc, CRC-16/CCITT-FALSE over bytes 0..14

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "actipipe/error.hpp"

namespace actipipe::wire {

inline constexpr std::size_t kFrameSize = 17;
inline constexpr std::uint8_t kMagic = 0xA5;
inline constexpr std::uint16_t kAdcMaxMv = 3300;

inline constexpr std::size_t kOffsetNode = 1;
inline constexpr std::size_t kOffsetSeq = 3;
inline constexpr std::size_t kOffsetTimestamp = 5;
inline constexpr std::size_t kOffsetAxes = 9;
inline constexpr std::size_t kOffsetCrc = 15;

using Frame = std::array<std::uint8_t, kFrameSize>;

/// One timestamped 3-axis millivolt reading as sent by a node.
///
/// `crc` is filled in by decode_packet; encode_packet always recomputes it,
/// so equality compares only the payload fields.
struct SensorPacket {
    std::uint16_t node_id = 0;
    std::uint16_t seq = 0;
    std::uint32_t timestamp_ms = 0;
    std::uint16_t ax_mv = 0;
    std::uint16_t ay_mv = 0;
    std::uint16_t az_mv = 0;
    std::uint16_t crc = 0;

    friend bool operator==(const SensorPacket& a, const SensorPacket& b) {
        return a.node_id == b.node_id && a.seq == b.seq && a.timestamp_ms == b.timestamp_ms &&
               a.ax_mv == b.ax_mv && a.ay_mv == b.ay_mv && a.az_mv == b.az_mv;
    }
};

enum class WireErrorKind { BadMagic, BadLength, BadCrc, MissingColumn, UnparsableRow };

const char* to_string(WireErrorKind kind);

class WireError : public Error {
public:
    WireError(WireErrorKind kind, const std::string& detail, std::size_t line = 0)
        : Error("wire", to_string(kind), detail), kind_(kind), line_(line) {}

    WireErrorKind kind() const noexcept { return kind_; }
    /// 1-based line number for CSV errors, 0 otherwise.
    std::size_t line() const noexcept { return line_; }

private:
    WireErrorKind kind_;
    std::size_t line_;
};

/// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor.
std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> bytes);

Frame encode_packet(const SensorPacket& p);

/// Throws WireError{BadLength, BadMagic, BadCrc}.
SensorPacket decode_packet(std::span<const std::uint8_t> bytes);

/// Non-throwing variant for hot ingestion loops.
struct DecodeResult {
    SensorPacket packet;
    std::optional<WireErrorKind> error;
    bool ok() const { return !error.has_value(); }
};
DecodeResult try_decode_packet(std::span<const std::uint8_t> bytes);

/// True when every axis reading lies in [0, 3300] mV.
bool in_adc_range(const SensorPacket& p);

enum class Units { Millivolts, G };
enum class Source { File, Datagram, Csv, Synthetic };

const char* to_string(Units u);
Units parse_units(const std::string& s);

struct RawSample {
    std::uint16_t node_id = 0;
    std::uint16_t seq = 0;
    std::uint32_t timestamp_ms = 0;
    std::array<double, 3> axes{};  // x, y, z in the stream's units

    friend bool operator==(const RawSample&, const RawSample&) = default;
};

RawSample to_sample(const SensorPacket& p);

struct StreamStats {
    std::size_t corrupt_frames = 0;
    std::size_t duplicates = 0;
    std::size_t late_dropped = 0;
    std::size_t out_of_range = 0;
};

struct RawSampleStream {
    Source source = Source::File;
    Units units = Units::Millivolts;
    std::vector<RawSample> samples;
    StreamStats stats;
};

/// Per-node reordering buffer. Holds up to `capacity` packets per node and
/// releases the oldest (by timestamp, then seq) once that is exceeded.
/// Packets older than the last released one are dropped as late; repeated
/// (node_id, seq) pairs are dropped as duplicates.
class ReorderBuffer {
public:
    explicit ReorderBuffer(std::size_t capacity = 8) : capacity_(capacity) {}

    /// Returns packets that became ready, in delivery order.
    std::vector<SensorPacket> push(const SensorPacket& p);
    /// Drains every buffered packet in order.
    std::vector<SensorPacket> flush();

    std::size_t duplicates() const { return duplicates_; }
    std::size_t late_dropped() const { return late_; }

private:
    struct NodeState {
        std::multimap<std::pair<std::uint32_t, std::uint16_t>, SensorPacket> pending;
        std::deque<std::uint16_t> recent_seqs;
        std::optional<std::uint32_t> last_released_ts;
    };
    static constexpr std::size_t kRecentSeqs = 64;

    void release(NodeState& st, std::vector<SensorPacket>& out);

    std::size_t capacity_;
    std::map<std::uint16_t, NodeState> nodes_;
    std::size_t duplicates_ = 0;
    std::size_t late_ = 0;
};

/// Decodes a concatenation of frames. Corrupt frames are counted and the
/// reader resynchronizes on the next magic byte.
RawSampleStream read_frames(std::span<const std::uint8_t> bytes, std::size_t reorder_capacity = 8);
RawSampleStream read_frames(std::istream& in, std::size_t reorder_capacity = 8);
RawSampleStream read_frames_file(const std::filesystem::path& path, std::size_t reorder_capacity = 8);

void write_frames(std::ostream& out, std::span<const SensorPacket> packets);

// ---- CSV -----------------------------------------------------------------

enum class CsvMode { Strict, Lenient };

struct CsvRowError {
    std::size_t line = 0;
    std::string message;
};

struct CsvReadResult {
    RawSampleStream stream;
    std::vector<CsvRowError> errors;  // only populated in lenient mode
};

/// Reads `timestamp_ms,ax,ay,az`. Column order in the header is free; extra
/// columns are ignored. Strict mode throws on the first bad row.
CsvReadResult read_csv(std::istream& in, Units units, CsvMode mode = CsvMode::Strict);
CsvReadResult read_csv(const std::filesystem::path& path, Units units,
                       CsvMode mode = CsvMode::Strict);

void write_csv(std::ostream& out, const RawSampleStream& stream);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace actipipe::wire
