#include "homsim/ptt.hpp"

#include "homsim/errors.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace homsim::ptt {

namespace {

constexpr std::array<char, 4> kMagic{'P', 'T', 'T', '1'};

template <class T>
void put_le(unsigned char* dst, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) dst[i] = static_cast<unsigned char>(v >> (8 * i));
}

template <class T>
T get_le(const unsigned char* src) {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(src[i]) << (8 * i));
    return v;
}

} // namespace

std::vector<Timestamp> File::channel_ps(std::uint8_t channel) const {
    std::vector<Timestamp> out;
    for (const auto& r : records) {
        if (r.channel != channel) continue;
        if (resolution_fs % 1000 == 0) {
            out.push_back(r.ticks * (resolution_fs / 1000));
        } else {
            const auto fs = static_cast<unsigned __int128>(r.ticks) * resolution_fs;
            out.push_back(static_cast<Timestamp>(fs / 1000));
        }
    }
    return out;
}

void write(std::ostream& os, const File& file) {
    std::array<unsigned char, kHeaderSize> header{};
    std::memcpy(header.data(), kMagic.data(), kMagic.size());
    put_le<std::uint16_t>(header.data() + 4, kVersion);
    put_le<std::uint16_t>(header.data() + 6, file.channel_count);
    put_le<std::uint64_t>(header.data() + 8, file.resolution_fs);
    put_le<std::uint64_t>(header.data() + 16, file.records.size());
    os.write(reinterpret_cast<const char*>(header.data()), header.size());

    std::vector<unsigned char> buf;
    constexpr std::size_t batch = 1 << 16;
    buf.reserve(batch * kRecordSize);
    for (std::size_t i = 0; i < file.records.size(); i += batch) {
        const std::size_t n = std::min(batch, file.records.size() - i);
        buf.assign(n * kRecordSize, 0);
        for (std::size_t j = 0; j < n; ++j) {
            const auto& r = file.records[i + j];
            if (r.channel >= file.channel_count) throw ValidationError("record channel exceeds channel count");
            unsigned char* p = buf.data() + j * kRecordSize;
            p[0] = r.channel;
            put_le<std::uint64_t>(p + 4, r.ticks);
        }
        os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    }
    if (!os) throw IoError("failed writing PTT stream");
}

void write_file(const std::string& path, const File& file) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    write(os, file);
    os.flush();
    if (!os) throw IoError("failed writing " + path);
}

File read(std::istream& is) {
    std::array<unsigned char, kHeaderSize> header{};
    is.read(reinterpret_cast<char*>(header.data()), header.size());
    if (is.gcount() != static_cast<std::streamsize>(header.size())) throw FormatError("PTT header truncated");
    if (std::memcmp(header.data(), kMagic.data(), kMagic.size()) != 0) throw FormatError("not a PTT file (bad magic)");
    const auto version = get_le<std::uint16_t>(header.data() + 4);
    if (version != kVersion) throw FormatError("unsupported PTT version " + std::to_string(version));

    File file;
    file.channel_count = get_le<std::uint16_t>(header.data() + 6);
    file.resolution_fs = get_le<std::uint64_t>(header.data() + 8);
    const auto n = get_le<std::uint64_t>(header.data() + 16);
    if (file.resolution_fs == 0) throw FormatError("PTT tick resolution is zero");
    if (file.channel_count == 0 && n > 0) throw FormatError("PTT file declares no channels");

    std::vector<std::uint64_t> last(file.channel_count, 0);
    std::vector<bool> seen(file.channel_count, false);
    constexpr std::size_t batch = 1 << 16;
    std::vector<unsigned char> buf(batch * kRecordSize);
    for (std::uint64_t i = 0; i < n; i += batch) {
        const std::size_t m = static_cast<std::size_t>(std::min<std::uint64_t>(batch, n - i));
        is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(m * kRecordSize));
        if (is.gcount() != static_cast<std::streamsize>(m * kRecordSize)) throw FormatError("PTT records truncated");
        for (std::size_t j = 0; j < m; ++j) {
            const unsigned char* p = buf.data() + j * kRecordSize;
            Record r{p[0], get_le<std::uint64_t>(p + 4)};
            if (r.channel >= file.channel_count) throw FormatError("PTT record channel out of range");
            if (seen[r.channel] && r.ticks < last[r.channel])
                throw FormatError("PTT timestamps decrease within channel " + std::to_string(r.channel));
            seen[r.channel] = true;
            last[r.channel] = r.ticks;
            file.records.push_back(r);
        }
    }
    if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after PTT records");
    return file;
}

File read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    return read(is);
}

File from_clicks(const interfere::ClickStreams& clicks) {
    File f;
    f.channel_count = 2;
    f.resolution_fs = kPicosecondTicksFs;
    const auto recs = interfere::to_records(clicks);
    f.records.reserve(recs.size());
    for (const auto& r : recs) f.records.push_back({static_cast<std::uint8_t>(r.channel), r.t_ps});
    return f;
}

} // namespace homsim::ptt
