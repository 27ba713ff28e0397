#pragma once

#include "homsim/interfere.hpp"
#include "homsim/units.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace homsim::ptt {

/// PTT1 time-tag files.
///
/// Header (24 bytes, little-endian): magic "PTT1", u16 version (= 1),
/// u16 channel count, u64 tick resolution in femtoseconds, u64 record count.
/// Record (12 bytes): u8 channel, u8 flags (0), u16 reserved (0), u64 ticks.
/// Timestamps are nondecreasing per channel.
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::uint64_t kPicosecondTicksFs = 1000;
inline constexpr std::size_t kHeaderSize = 24;
inline constexpr std::size_t kRecordSize = 12;

struct Record {
    std::uint8_t channel = 0;
    std::uint64_t ticks = 0;

    friend bool operator==(const Record&, const Record&) = default;
};

struct File {
    std::uint16_t channel_count = 2;
    std::uint64_t resolution_fs = kPicosecondTicksFs;
    std::vector<Record> records;

    /// Timestamps of one channel converted to picoseconds.
    std::vector<Timestamp> channel_ps(std::uint8_t channel) const;
};

void write(std::ostream& os, const File& file);
void write_file(const std::string& path, const File& file);
/// Throws FormatError on bad magic, version, truncation, channel overflow or
/// per-channel timestamps going backwards.
File read(std::istream& is);
File read_file(const std::string& path);

/// Two-channel picosecond file from detector clicks (channel 0 = D1, 1 = D2).
File from_clicks(const interfere::ClickStreams& clicks);

} // namespace homsim::ptt
