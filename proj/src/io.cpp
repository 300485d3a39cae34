#include "fmdelta/io.hpp"

#include <cstring>
#include <fstream>

#include "fmdelta/bytes.hpp"

namespace fmdelta {

namespace {

constexpr std::uint32_t kPcapMagic = 0xA1B2C3D4;

void put_u16le(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

std::uint32_t read_u32le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

} // namespace

FileFormat detect_format(std::span<const std::uint8_t> data) {
    if (data.size() >= 4) {
        if (std::memcmp(data.data(), "FMP1", 4) == 0) return FileFormat::fmp1;
        if (std::memcmp(data.data(), "FMD1", 4) == 0) return FileFormat::fmd1;
        if (std::memcmp(data.data(), "FMA1", 4) == 0) return FileFormat::fma1;
        std::uint32_t le = read_u32le(data.data());
        std::uint32_t be = read_u32be(data.data());
        if (le == kPcapMagic || be == kPcapMagic) return FileFormat::pcap;
    }
    return FileFormat::unknown;
}

std::vector<std::uint8_t> build_fmp1_body(std::span<const RawPacket> packets) {
    std::size_t total = 0;
    for (const RawPacket& p : packets)
        total += 2 + p.length();
    std::vector<std::uint8_t> out;
    out.reserve(total);
    for (const RawPacket& p : packets) {
        validate_packet(p);
        put_u16be(out, static_cast<std::uint16_t>(p.length()));
        out.insert(out.end(), p.bytes.begin(), p.bytes.end());
    }
    return out;
}

std::vector<std::uint8_t> build_fmp1(std::span<const RawPacket> packets) {
    std::vector<std::uint8_t> out;
    out.reserve(8);
    out.insert(out.end(), {'F', 'M', 'P', '1'});
    put_u32be(out, static_cast<std::uint32_t>(packets.size()));
    std::vector<std::uint8_t> body = build_fmp1_body(packets);
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

std::vector<RawPacket> parse_fmp1(std::span<const std::uint8_t> data) {
    if (data.size() < 8 || std::memcmp(data.data(), "FMP1", 4) != 0)
        throw CorruptStreamError("not an FMP1 dataset");
    const std::uint32_t count = read_u32be(data.data() + 4);
    std::vector<RawPacket> packets;
    packets.reserve(count);
    std::size_t off = 8;
    for (std::uint32_t i = 0; i < count; ++i) {
        if (off + 2 > data.size())
            throw CorruptStreamError("truncated packet length", i);
        const std::uint16_t len = read_u16be(data.data() + off);
        off += 2;
        if (len < 1 || len > kMaxPacketLength)
            throw CorruptStreamError("packet length out of bounds", i);
        if (off + len > data.size())
            throw CorruptStreamError("truncated packet bytes", i);
        packets.push_back(RawPacket{{data.begin() + off, data.begin() + off + len}});
        off += len;
    }
    if (off != data.size())
        throw CorruptStreamError("trailing bytes after last packet");
    return packets;
}

std::vector<std::uint8_t> build_pcap(std::span<const RawPacket> packets) {
    std::vector<std::uint8_t> out;
    put_u32le(out, kPcapMagic);
    put_u16le(out, 2);       // version major
    put_u16le(out, 4);       // version minor
    put_u32le(out, 0);       // thiszone
    put_u32le(out, 0);       // sigfigs
    put_u32le(out, 65535);   // snaplen
    put_u32le(out, 1);       // link type: Ethernet
    for (const RawPacket& p : packets) {
        validate_packet(p);
        put_u32le(out, 0);   // ts_sec
        put_u32le(out, 0);   // ts_usec
        put_u32le(out, static_cast<std::uint32_t>(p.length()));
        put_u32le(out, static_cast<std::uint32_t>(p.length()));
        out.insert(out.end(), p.bytes.begin(), p.bytes.end());
    }
    return out;
}

std::vector<RawPacket> parse_pcap(std::span<const std::uint8_t> data) {
    if (data.size() < 24)
        throw CorruptStreamError("truncated pcap header");

    bool little;
    if (read_u32le(data.data()) == kPcapMagic)
        little = true;
    else if (read_u32be(data.data()) == kPcapMagic)
        little = false;
    else
        throw CorruptStreamError("not a classic pcap file");

    auto u32 = [&](std::size_t off) {
        return little ? read_u32le(data.data() + off) : read_u32be(data.data() + off);
    };

    if (u32(20) != 1)
        throw CorruptStreamError("pcap link type is not Ethernet");

    std::vector<RawPacket> packets;
    std::size_t off = 24;
    std::size_t index = 0;
    while (off < data.size()) {
        if (off + 16 > data.size())
            throw CorruptStreamError("truncated pcap record header", index);
        const std::uint32_t incl = u32(off + 8);
        const std::uint32_t orig = u32(off + 12);
        off += 16;
        if (incl != orig || incl < 1 || incl > kMaxPacketLength)
            throw CorruptStreamError("pcap record length out of bounds", index);
        if (off + incl > data.size())
            throw CorruptStreamError("truncated pcap record", index);
        packets.push_back(RawPacket{{data.begin() + off, data.begin() + off + incl}});
        off += incl;
        ++index;
    }
    return packets;
}

std::vector<RawPacket> parse_dataset(std::span<const std::uint8_t> data) {
    switch (detect_format(data)) {
    case FileFormat::fmp1:
        return parse_fmp1(data);
    case FileFormat::pcap:
        return parse_pcap(data);
    default:
        throw CorruptStreamError("unrecognized dataset format (expected FMP1 or pcap)");
    }
}

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open " + path);
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    if (in.bad())
        throw Error("read failed: " + path);
    return data;
}

void write_file(const std::string& path, std::span<const std::uint8_t> data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
    if (!out)
        throw Error("write failed: " + path);
}

} // namespace fmdelta
