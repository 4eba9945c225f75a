#pragma once

// =============================================================================
// Tag stream serialization. The canonical on-disk format is ".ttg": a 20-byte
// little-endian header (magic "TTG1", version, channel count, time unit,
// record count) followed by fixed 16-byte records (channel byte, 7 reserved
// zero bytes, signed 64-bit picosecond timestamp). A CSV alternative
// ("channel,timestamp_ps") exists for interoperability; binary is canonical.
// =============================================================================

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <limits>
#include <fstream>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "tci/bus_readout.hpp"
#include "tci/errors.hpp"

namespace tci {

struct TagFileHeader {
    static constexpr std::array<char, 4> magic = {'T', 'T', 'G', '1'};
    static constexpr std::uint16_t current_version = 1;
    static constexpr std::size_t byte_size = 20;

    std::uint16_t version = current_version;
    std::uint16_t channel_count = 4;
    std::uint32_t time_unit_ps = 1;  // picoseconds per timestamp LSB
    std::uint64_t record_count = 0;
};

inline constexpr std::size_t tag_record_size = 16;

namespace detail {

template <typename T>
void put_le(unsigned char* out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
        out[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff);
}

template <typename T>
T get_le(const unsigned char* in) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
    return static_cast<T>(v);
}

inline void check_sorted_per_channel(const std::vector<Tag>& tags) {
    std::array<std::int64_t, 4> last = {std::numeric_limits<std::int64_t>::min(),
                                        std::numeric_limits<std::int64_t>::min(),
                                        std::numeric_limits<std::int64_t>::min(),
                                        std::numeric_limits<std::int64_t>::min()};
    for (std::size_t i = 0; i < tags.size(); ++i) {
        const auto ch = static_cast<std::size_t>(tags[i].channel);
        if (ch >= 4)
            throw data_error("write_tags: invalid channel in record " + std::to_string(i));
        if (tags[i].time_ps < last[ch])
            throw data_error("write_tags: tags not time-sorted per channel at record " +
                             std::to_string(i));
        last[ch] = tags[i].time_ps;
    }
}

} // namespace detail

/// Serialize a tag stream (time-sorted per channel) to the binary format.
/// Returns the number of bytes written: 20 + 16 * n.
inline std::uint64_t write_tags(const std::vector<Tag>& tags, std::ostream& out) {
    detail::check_sorted_per_channel(tags);

    unsigned char header[TagFileHeader::byte_size];
    std::memcpy(header, TagFileHeader::magic.data(), 4);
    detail::put_le<std::uint16_t>(header + 4, TagFileHeader::current_version);
    detail::put_le<std::uint16_t>(header + 6, 4);
    detail::put_le<std::uint32_t>(header + 8, 1);
    detail::put_le<std::uint64_t>(header + 12, tags.size());
    out.write(reinterpret_cast<const char*>(header), sizeof(header));

    unsigned char record[tag_record_size];
    std::memset(record, 0, sizeof(record));
    for (const Tag& tag : tags) {
        record[0] = static_cast<unsigned char>(tag.channel);
        detail::put_le<std::int64_t>(record + 8, tag.time_ps);
        out.write(reinterpret_cast<const char*>(record), sizeof(record));
    }
    if (!out) throw data_error("write_tags: I/O failure");
    return TagFileHeader::byte_size + tag_record_size * tags.size();
}

inline std::uint64_t write_tags(const std::vector<Tag>& tags,
                                const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("write_tags: cannot open " + path.string());
    return write_tags(tags, out);
}

/// Parse a binary tag file; exact inverse of write_tags. Malformed input
/// raises a data_error naming the byte offset.
inline std::vector<Tag> read_tags(std::istream& in) {
    unsigned char header[TagFileHeader::byte_size];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(header)))
        throw data_error("read_tags: truncated header at offset 0: expected " +
                         std::to_string(sizeof(header)) + " bytes, got " +
                         std::to_string(in.gcount()));
    if (std::memcmp(header, TagFileHeader::magic.data(), 4) != 0)
        throw data_error("read_tags: bad magic at offset 0");
    const auto version = detail::get_le<std::uint16_t>(header + 4);
    if (version != TagFileHeader::current_version)
        throw data_error("read_tags: unsupported version " + std::to_string(version) +
                         " at offset 4");
    const auto channel_count = detail::get_le<std::uint16_t>(header + 6);
    if (channel_count != 4)
        throw data_error("read_tags: unexpected channel count " +
                         std::to_string(channel_count) + " at offset 6");
    const auto record_count = detail::get_le<std::uint64_t>(header + 12);

    std::vector<Tag> tags;
    tags.reserve(record_count);
    unsigned char record[tag_record_size];
    for (std::uint64_t i = 0; i < record_count; ++i) {
        const std::uint64_t offset = TagFileHeader::byte_size + i * tag_record_size;
        in.read(reinterpret_cast<char*>(record), sizeof(record));
        if (in.gcount() != static_cast<std::streamsize>(sizeof(record)))
            throw data_error("read_tags: truncated record at offset " +
                             std::to_string(offset) + ": expected " +
                             std::to_string(sizeof(record)) + " bytes, got " +
                             std::to_string(in.gcount()));
        if (record[0] >= 4)
            throw data_error("read_tags: invalid channel " + std::to_string(record[0]) +
                             " at offset " + std::to_string(offset));
        tags.push_back({static_cast<Channel>(record[0]),
                        detail::get_le<std::int64_t>(record + 8)});
    }
    return tags;
}

inline std::vector<Tag> read_tags(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("read_tags: cannot open " + path.string());
    return read_tags(in);
}

/// CSV alternative: header line "channel,timestamp_ps", channel as 0..3.
inline void write_tags_csv(const std::vector<Tag>& tags, std::ostream& out) {
    detail::check_sorted_per_channel(tags);
    out << "channel,timestamp_ps\n";
    for (const Tag& tag : tags)
        out << static_cast<int>(tag.channel) << ',' << tag.time_ps << '\n';
    if (!out) throw data_error("write_tags_csv: I/O failure");
}

inline void write_tags_csv(const std::vector<Tag>& tags,
                           const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw data_error("write_tags_csv: cannot open " + path.string());
    write_tags_csv(tags, out);
}

inline std::vector<Tag> read_tags_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "channel,timestamp_ps")
        throw data_error("read_tags_csv: missing or wrong header line");
    std::vector<Tag> tags;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw data_error("read_tags_csv: malformed line " + std::to_string(line_no));
        int channel = 0;
        std::int64_t time = 0;
        try {
            channel = std::stoi(line.substr(0, comma));
            time = std::stoll(line.substr(comma + 1));
        } catch (const std::exception&) {
            throw data_error("read_tags_csv: malformed line " + std::to_string(line_no));
        }
        if (channel < 0 || channel > 3)
            throw data_error("read_tags_csv: invalid channel at line " +
                             std::to_string(line_no));
        tags.push_back({static_cast<Channel>(channel), time});
    }
    return tags;
}

inline std::vector<Tag> read_tags_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw data_error("read_tags_csv: cannot open " + path.string());
    return read_tags_csv(in);
}

/// Stable k-way merge of time-sorted tag streams. Equal timestamps keep the
/// earlier stream's record first (and input order within one stream).
inline std::vector<Tag> merge_streams(const std::vector<std::vector<Tag>>& streams) {
    for (std::size_t s = 0; s < streams.size(); ++s)
        for (std::size_t i = 1; i < streams[s].size(); ++i)
            if (streams[s][i].time_ps < streams[s][i - 1].time_ps)
                throw data_error("merge_streams: stream " + std::to_string(s) +
                                 " not time-sorted at record " + std::to_string(i));

    struct Cursor {
        std::int64_t time;
        std::size_t stream;
        std::size_t index;
    };
    auto later = [](const Cursor& a, const Cursor& b) {
        return a.time != b.time ? a.time > b.time : a.stream > b.stream;
    };
    std::priority_queue<Cursor, std::vector<Cursor>, decltype(later)> heap(later);
    std::size_t total = 0;
    for (std::size_t s = 0; s < streams.size(); ++s) {
        total += streams[s].size();
        if (!streams[s].empty()) heap.push({streams[s][0].time_ps, s, 0});
    }

    std::vector<Tag> merged;
    merged.reserve(total);
    while (!heap.empty()) {
        const Cursor top = heap.top();
        heap.pop();
        merged.push_back(streams[top.stream][top.index]);
        const std::size_t next = top.index + 1;
        if (next < streams[top.stream].size())
            heap.push({streams[top.stream][next].time_ps, top.stream, next});
    }
    return merged;
}

} // namespace tci
