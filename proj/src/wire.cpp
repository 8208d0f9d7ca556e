#include "actipipe/wire.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <istream>
#include <ostream>
#include <system_error>

namespace actipipe::wire {

namespace {

constexpr std::array<std::uint16_t, 256> make_crc_table() {
    std::array<std::uint16_t, 256> table{};
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint16_t crc = static_cast<std::uint16_t>(i << 8);
        for (int bit = 0; bit < 8; ++bit) {
            crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021)
                                 : static_cast<std::uint16_t>(crc << 1);
        }
        table[i] = crc;
    }
    return table;
}

constexpr auto kCrcTable = make_crc_table();

void put_le16(std::uint8_t* dst, std::uint16_t v) {
    dst[0] = static_cast<std::uint8_t>(v & 0xFF);
    dst[1] = static_cast<std::uint8_t>(v >> 8);
}

void put_le32(std::uint8_t* dst, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) dst[i] = static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF);
}

std::uint16_t get_le16(const std::uint8_t* src) {
    return static_cast<std::uint16_t>(src[0] | (src[1] << 8));
}

std::uint32_t get_le32(const std::uint8_t* src) {
    return static_cast<std::uint32_t>(src[0]) | (static_cast<std::uint32_t>(src[1]) << 8) |
           (static_cast<std::uint32_t>(src[2]) << 16) | (static_cast<std::uint32_t>(src[3]) << 24);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

const char* to_string(WireErrorKind kind) {
    switch (kind) {
        case WireErrorKind::BadMagic: return "BadMagic";
        case WireErrorKind::BadLength: return "BadLength";
        case WireErrorKind::BadCrc: return "BadCrc";
        case WireErrorKind::MissingColumn: return "MissingColumn";
        case WireErrorKind::UnparsableRow: return "UnparsableRow";
    }
    return "Unknown";
}

const char* to_string(Units u) { return u == Units::Millivolts ? "mv" : "g"; }

Units parse_units(const std::string& s) {
    if (s == "mv") return Units::Millivolts;
    if (s == "g") return Units::G;
    throw std::invalid_argument("units must be 'mv' or 'g', got '" + s + "'");
}

std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> bytes) {
    std::uint16_t crc = 0xFFFF;
    for (std::uint8_t b : bytes) {
        crc = static_cast<std::uint16_t>((crc << 8) ^ kCrcTable[((crc >> 8) ^ b) & 0xFF]);
    }
    return crc;
}

Frame encode_packet(const SensorPacket& p) {
    Frame f{};
    f[0] = kMagic;
    put_le16(&f[kOffsetNode], p.node_id);
    put_le16(&f[kOffsetSeq], p.seq);
    put_le32(&f[kOffsetTimestamp], p.timestamp_ms);
    put_le16(&f[kOffsetAxes], p.ax_mv);
    put_le16(&f[kOffsetAxes + 2], p.ay_mv);
    put_le16(&f[kOffsetAxes + 4], p.az_mv);
    put_le16(&f[kOffsetCrc], crc16_ccitt_false(std::span(f.data(), kOffsetCrc)));
    return f;
}

DecodeResult try_decode_packet(std::span<const std::uint8_t> bytes) {
    DecodeResult r;
    if (bytes.size() != kFrameSize) {
        r.error = WireErrorKind::BadLength;
        return r;
    }
    if (bytes[0] != kMagic) {
        r.error = WireErrorKind::BadMagic;
        return r;
    }
    const std::uint16_t want = get_le16(&bytes[kOffsetCrc]);
    if (crc16_ccitt_false(bytes.first(kOffsetCrc)) != want) {
        r.error = WireErrorKind::BadCrc;
        return r;
    }
    SensorPacket& p = r.packet;
    p.node_id = get_le16(&bytes[kOffsetNode]);
    p.seq = get_le16(&bytes[kOffsetSeq]);
    p.timestamp_ms = get_le32(&bytes[kOffsetTimestamp]);
    p.ax_mv = get_le16(&bytes[kOffsetAxes]);
    p.ay_mv = get_le16(&bytes[kOffsetAxes + 2]);
    p.az_mv = get_le16(&bytes[kOffsetAxes + 4]);
    p.crc = want;
    return r;
}

SensorPacket decode_packet(std::span<const std::uint8_t> bytes) {
    auto r = try_decode_packet(bytes);
    if (!r.ok()) {
        std::string detail;
        switch (*r.error) {
            case WireErrorKind::BadLength:
                detail = "expected " + std::to_string(kFrameSize) + " bytes, got " +
                         std::to_string(bytes.size());
                break;
            case WireErrorKind::BadMagic: detail = "first byte is not 0xA5"; break;
            default: detail = "checksum mismatch"; break;
        }
        throw WireError(*r.error, detail);
    }
    return r.packet;
}

bool in_adc_range(const SensorPacket& p) {
    return p.ax_mv <= kAdcMaxMv && p.ay_mv <= kAdcMaxMv && p.az_mv <= kAdcMaxMv;
}

RawSample to_sample(const SensorPacket& p) {
    return RawSample{p.node_id, p.seq, p.timestamp_ms,
                     {static_cast<double>(p.ax_mv), static_cast<double>(p.ay_mv),
                      static_cast<double>(p.az_mv)}};
}

// ---- ReorderBuffer -------------------------------------------------------

void ReorderBuffer::release(NodeState& st, std::vector<SensorPacket>& out) {
    auto it = st.pending.begin();
    st.last_released_ts = it->second.timestamp_ms;
    st.recent_seqs.push_back(it->second.seq);
    if (st.recent_seqs.size() > kRecentSeqs) st.recent_seqs.pop_front();
    out.push_back(it->second);
    st.pending.erase(it);
}

std::vector<SensorPacket> ReorderBuffer::push(const SensorPacket& p) {
    std::vector<SensorPacket> out;
    NodeState& st = nodes_[p.node_id];

    const bool seen_released =
        std::find(st.recent_seqs.begin(), st.recent_seqs.end(), p.seq) != st.recent_seqs.end();
    const bool seen_pending = std::any_of(st.pending.begin(), st.pending.end(),
                                          [&](const auto& kv) { return kv.second.seq == p.seq; });
    if (seen_released || seen_pending) {
        ++duplicates_;
        return out;
    }
    if (st.last_released_ts && p.timestamp_ms < *st.last_released_ts) {
        ++late_;
        return out;
    }
    st.pending.emplace(std::make_pair(p.timestamp_ms, p.seq), p);
    while (st.pending.size() > capacity_) release(st, out);
    return out;
}

std::vector<SensorPacket> ReorderBuffer::flush() {
    std::vector<SensorPacket> out;
    for (auto& [node, st] : nodes_) {
        while (!st.pending.empty()) release(st, out);
    }
    return out;
}

// ---- Frame files ---------------------------------------------------------

RawSampleStream read_frames(std::span<const std::uint8_t> bytes, std::size_t reorder_capacity) {
    RawSampleStream stream;
    stream.source = Source::File;
    stream.units = Units::Millivolts;
    ReorderBuffer reorder(reorder_capacity);

    auto deliver = [&](const std::vector<SensorPacket>& ready) {
        for (const auto& p : ready) {
            if (!in_adc_range(p)) ++stream.stats.out_of_range;
            stream.samples.push_back(to_sample(p));
        }
    };

    std::size_t pos = 0;
    while (pos < bytes.size()) {
        if (bytes.size() - pos < kFrameSize) {
            ++stream.stats.corrupt_frames;  // truncated tail
            break;
        }
        auto r = try_decode_packet(bytes.subspan(pos, kFrameSize));
        if (r.ok()) {
            deliver(reorder.push(r.packet));
            pos += kFrameSize;
            continue;
        }
        ++stream.stats.corrupt_frames;
        auto next = std::find(bytes.begin() + static_cast<std::ptrdiff_t>(pos) + 1, bytes.end(), kMagic);
        pos = static_cast<std::size_t>(next - bytes.begin());
    }
    deliver(reorder.flush());
    stream.stats.duplicates = reorder.duplicates();
    stream.stats.late_dropped = reorder.late_dropped();
    return stream;
}

RawSampleStream read_frames(std::istream& in, std::size_t reorder_capacity) {
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return read_frames(std::span<const std::uint8_t>(bytes), reorder_capacity);
}

RawSampleStream read_frames_file(const std::filesystem::path& path, std::size_t reorder_capacity) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("wire", "Unreadable", "cannot open " + path.string());
    return read_frames(in, reorder_capacity);
}

void write_frames(std::ostream& out, std::span<const SensorPacket> packets) {
    for (const auto& p : packets) {
        auto f = encode_packet(p);
        out.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(f.size()));
    }
}

// ---- CSV -----------------------------------------------------------------

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

CsvReadResult read_csv(std::istream& in, Units units, CsvMode mode) {
    CsvReadResult result;
    result.stream.source = Source::Csv;
    result.stream.units = units;

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw WireError(WireErrorKind::MissingColumn, "empty input, no header");
    }
    ++line_no;
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
        static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF) {
        line.erase(0, 3);
    }

    const auto header = split_commas(line);
    constexpr std::array<std::string_view, 4> kColumns{"timestamp_ms", "ax", "ay", "az"};
    std::array<std::size_t, 4> col{};
    for (std::size_t c = 0; c < kColumns.size(); ++c) {
        auto it = std::find(header.begin(), header.end(), kColumns[c]);
        if (it == header.end()) {
            throw WireError(WireErrorKind::MissingColumn,
                            "header lacks column '" + std::string(kColumns[c]) + "'", 1);
        }
        col[c] = static_cast<std::size_t>(it - header.begin());
    }
    const std::size_t needed = *std::max_element(col.begin(), col.end()) + 1;

    std::uint16_t seq = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_commas(line);
        RawSample s;
        std::string problem;
        if (fields.size() < needed) {
            problem = "expected at least " + std::to_string(needed) + " fields";
        } else if (!parse_number(fields[col[0]], s.timestamp_ms)) {
            problem = "bad timestamp_ms '" + std::string(fields[col[0]]) + "'";
        } else {
            for (std::size_t a = 0; a < 3; ++a) {
                if (!parse_number(fields[col[a + 1]], s.axes[a])) {
                    problem = "bad " + std::string(kColumns[a + 1]) + " '" +
                              std::string(fields[col[a + 1]]) + "'";
                    break;
                }
            }
        }
        if (!problem.empty()) {
            if (mode == CsvMode::Strict) {
                throw WireError(WireErrorKind::UnparsableRow,
                                "line " + std::to_string(line_no) + ": " + problem, line_no);
            }
            result.errors.push_back({line_no, problem});
            continue;
        }
        s.seq = seq++;
        result.stream.samples.push_back(s);
    }
    return result;
}

CsvReadResult read_csv(const std::filesystem::path& path, Units units, CsvMode mode) {
    std::ifstream in(path);
    if (!in) throw Error("wire", "Unreadable", "cannot open " + path.string());
    return read_csv(in, units, mode);
}

void write_csv(std::ostream& out, const RawSampleStream& stream) {
    out << "timestamp_ms,ax,ay,az\n";
    for (const auto& s : stream.samples) {
        out << s.timestamp_ms << ',' << format_double(s.axes[0]) << ',' << format_double(s.axes[1])
            << ',' << format_double(s.axes[2]) << '\n';
    }
}

}  // namespace actipipe::wire
