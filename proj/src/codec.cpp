#include "fmdelta/codec.hpp"

#include <algorithm>
#include <cstring>

#include "fmdelta/bytes.hpp"

namespace fmdelta {

void validate_packet(const RawPacket& packet) {
    if (packet.length() < 1 || packet.length() > kMaxPacketLength)
        throw UsageError("packet length " + std::to_string(packet.length()) +
                         " outside [1, " + std::to_string(kMaxPacketLength) + "]");
}

bool valid_word_size(unsigned word_size) {
    return word_size == 1 || word_size == 2 || word_size == 4 ||
           word_size == 8 || word_size == 16;
}

void validate_params(const CodecParams& params) {
    if (!valid_word_size(params.word_size))
        throw UsageError("word size must be one of 1, 2, 4, 8, 16 (got " +
                         std::to_string(params.word_size) + ")");
    if (params.entry_interval < 1)
        throw UsageError("entry interval must be >= 1");
}

DeltaRecord encode_first(const RawPacket& packet) {
    validate_packet(packet);
    DeltaRecord rec;
    rec.flags = kFlagUncompressed;
    rec.length = static_cast<std::uint16_t>(packet.length());
    rec.values = packet.bytes;
    return rec;
}

DeltaRecord encode_delta(const RawPacket& prev, const RawPacket& curr,
                         unsigned word_size) {
    validate_packet(prev);
    validate_packet(curr);
    if (!valid_word_size(word_size))
        throw UsageError("word size must be one of 1, 2, 4, 8, 16 (got " +
                         std::to_string(word_size) + ")");

    const std::size_t len = curr.length();
    const std::size_t words = word_count(len, word_size);

    DeltaRecord rec;
    rec.flags = 0;
    rec.length = static_cast<std::uint16_t>(len);
    rec.bitmap.assign(bitmap_bytes(words), 0);

    for (std::size_t j = 0; j < words; ++j) {
        const std::size_t begin = j * word_size;
        const std::size_t end = std::min(len, begin + word_size);
        // A word may be copied from the predecessor only if every one of
        // its bytes exists there and matches.
        bool same = end <= prev.length() &&
                    std::equal(curr.bytes.begin() + begin, curr.bytes.begin() + end,
                               prev.bytes.begin() + begin);
        if (same) {
            rec.bitmap[j / 8] |= static_cast<std::uint8_t>(0x80u >> (j % 8));
        } else {
            rec.values.insert(rec.values.end(), curr.bytes.begin() + begin,
                              curr.bytes.begin() + end);
        }
    }
    return rec;
}

namespace {

bool bitmap_bit(const std::vector<std::uint8_t>& bitmap, std::size_t j) {
    return (bitmap[j / 8] & (0x80u >> (j % 8))) != 0;
}

} // namespace

RawPacket decode_delta(const DeltaRecord& record, const RawPacket& prev,
                       unsigned word_size, std::size_t record_index) {
    if (record.uncompressed())
        throw CorruptStreamError("expected a delta record", record_index);

    const std::size_t len = record.length;
    const std::size_t words = word_count(len, word_size);
    if (record.bitmap.size() != bitmap_bytes(words))
        throw CorruptStreamError("bitmap size mismatch", record_index);

    RawPacket out;
    out.bytes.resize(len);

    std::size_t consumed = 0;
    for (std::size_t j = 0; j < words; ++j) {
        const std::size_t begin = j * word_size;
        const std::size_t end = std::min(len, begin + word_size);
        if (bitmap_bit(record.bitmap, j)) {
            if (end > prev.length())
                throw CorruptStreamError(
                    "bitmap claims word " + std::to_string(j) +
                        " copies beyond predecessor length " +
                        std::to_string(prev.length()),
                    record_index);
            std::copy(prev.bytes.begin() + begin, prev.bytes.begin() + end,
                      out.bytes.begin() + begin);
        } else {
            if (consumed + (end - begin) > record.values.size())
                throw CorruptStreamError("values exhausted at word " + std::to_string(j),
                                         record_index);
            std::copy(record.values.begin() + consumed,
                      record.values.begin() + consumed + (end - begin),
                      out.bytes.begin() + begin);
            consumed += end - begin;
        }
    }
    if (consumed != record.values.size())
        throw CorruptStreamError("trailing bytes in values section", record_index);
    return out;
}

RawPacket decode_record(const DeltaRecord& record, const RawPacket* prev,
                        unsigned word_size, std::size_t record_index) {
    if (record.uncompressed()) {
        if (record.values.size() != record.length)
            throw CorruptStreamError("uncompressed payload does not match length",
                                     record_index);
        return RawPacket{record.values};
    }
    if (prev == nullptr)
        throw CorruptStreamError("delta record without a predecessor", record_index);
    return decode_delta(record, *prev, word_size, record_index);
}

CompressedStream compress_sequence(std::span<const RawPacket> packets,
                                   const CodecParams& params) {
    validate_params(params);
    if (packets.empty())
        throw UsageError("cannot compress an empty packet sequence");

    CompressedStream stream;
    stream.params = params;
    stream.records.reserve(packets.size());

    for (std::size_t i = 0; i < packets.size(); ++i) {
        try {
            validate_packet(packets[i]);
            if (i % params.entry_interval == 0) {
                stream.records.push_back(encode_first(packets[i]));
                continue;
            }
            DeltaRecord delta = encode_delta(packets[i - 1], packets[i], params.word_size);
            // Incompressibility fallback: never store a delta that is not
            // strictly smaller than the raw form.
            if (delta.wire_size() >= kRecordHeaderSize + packets[i].length())
                stream.records.push_back(encode_first(packets[i]));
            else
                stream.records.push_back(std::move(delta));
        } catch (const Error& e) {
            throw UsageError("packet " + std::to_string(i) + ": " + e.what());
        }
    }
    return stream;
}

std::vector<RawPacket> decompress_sequence(const CompressedStream& stream) {
    validate_params(stream.params);
    if (stream.records.empty())
        throw CorruptStreamError("stream holds no records");

    std::vector<RawPacket> packets;
    packets.reserve(stream.records.size());

    for (std::size_t i = 0; i < stream.records.size(); ++i) {
        const DeltaRecord& rec = stream.records[i];
        if (i % stream.params.entry_interval == 0 && !rec.uncompressed())
            throw CorruptStreamError("entry-point record is not uncompressed", i);
        const RawPacket* prev = i > 0 ? &packets[i - 1] : nullptr;
        packets.push_back(decode_record(rec, prev, stream.params.word_size, i));
        if (packets.back().length() < 1 || packets.back().length() > kMaxPacketLength)
            throw CorruptStreamError("decoded packet length out of bounds", i);
    }
    return packets;
}

std::size_t compressed_size(const CompressedStream& stream) {
    if (stream.records.empty())
        throw UsageError("empty stream has no size");
    std::size_t total = 0;
    for (const DeltaRecord& rec : stream.records)
        total += rec.wire_size();
    return total;
}

void append_record(std::vector<std::uint8_t>& out, const DeltaRecord& record) {
    out.push_back(record.flags);
    put_u16be(out, record.length);
    out.insert(out.end(), record.bitmap.begin(), record.bitmap.end());
    out.insert(out.end(), record.values.begin(), record.values.end());
}

DeltaRecord parse_record(std::span<const std::uint8_t> data, std::size_t& offset,
                         unsigned word_size, std::size_t record_index) {
    if (offset + kRecordHeaderSize > data.size())
        throw CorruptStreamError("truncated record header", record_index);

    DeltaRecord rec;
    rec.flags = data[offset];
    if ((rec.flags & ~kFlagUncompressed) != 0)
        throw CorruptStreamError("reserved flag bits set", record_index);
    rec.length = read_u16be(data.data() + offset + 1);
    if (rec.length < 1 || rec.length > kMaxPacketLength)
        throw CorruptStreamError("record length out of bounds", record_index);
    offset += kRecordHeaderSize;

    if (rec.uncompressed()) {
        if (offset + rec.length > data.size())
            throw CorruptStreamError("truncated uncompressed payload", record_index);
        rec.values.assign(data.begin() + offset, data.begin() + offset + rec.length);
        offset += rec.length;
        return rec;
    }

    const std::size_t words = word_count(rec.length, word_size);
    const std::size_t bm_bytes = bitmap_bytes(words);
    if (offset + bm_bytes > data.size())
        throw CorruptStreamError("truncated bitmap", record_index);
    rec.bitmap.assign(data.begin() + offset, data.begin() + offset + bm_bytes);
    offset += bm_bytes;

    // The values section size is fully determined by the bitmap.
    std::size_t values_bytes = 0;
    for (std::size_t j = 0; j < words; ++j) {
        if (!bitmap_bit(rec.bitmap, j)) {
            const std::size_t begin = j * word_size;
            values_bytes += std::min<std::size_t>(rec.length, begin + word_size) - begin;
        }
    }
    if (offset + values_bytes > data.size())
        throw CorruptStreamError("truncated values section", record_index);
    rec.values.assign(data.begin() + offset, data.begin() + offset + values_bytes);
    offset += values_bytes;
    return rec;
}

namespace {

constexpr char kStreamMagic[4] = {'F', 'M', 'D', '1'};
constexpr std::uint8_t kStreamVersion = 0x01;
constexpr std::size_t kStreamHeaderSize = 4 + 1 + 1 + 4 + 4;

} // namespace

std::vector<std::uint8_t> serialize_stream(const CompressedStream& stream) {
    validate_params(stream.params);
    std::vector<std::uint8_t> out;
    out.reserve(kStreamHeaderSize + compressed_size(stream));
    out.insert(out.end(), kStreamMagic, kStreamMagic + 4);
    out.push_back(kStreamVersion);
    out.push_back(static_cast<std::uint8_t>(stream.params.word_size));
    put_u32be(out, stream.params.entry_interval);
    put_u32be(out, static_cast<std::uint32_t>(stream.records.size()));
    for (const DeltaRecord& rec : stream.records)
        append_record(out, rec);
    return out;
}

CompressedStream parse_stream(std::span<const std::uint8_t> data) {
    if (data.size() < kStreamHeaderSize)
        throw CorruptStreamError("truncated stream header");
    if (std::memcmp(data.data(), kStreamMagic, 4) != 0)
        throw CorruptStreamError("bad magic, expected FMD1");
    if (data[4] != kStreamVersion)
        throw CorruptStreamError("unsupported stream version " + std::to_string(data[4]));

    CompressedStream stream;
    stream.params.word_size = data[5];
    stream.params.entry_interval = read_u32be(data.data() + 6);
    if (!valid_word_size(stream.params.word_size))
        throw CorruptStreamError("invalid word size in header");
    if (stream.params.entry_interval < 1)
        throw CorruptStreamError("invalid entry interval in header");

    const std::uint32_t count = read_u32be(data.data() + 10);
    if (count == 0)
        throw CorruptStreamError("stream holds no records");

    std::size_t offset = kStreamHeaderSize;
    stream.records.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        DeltaRecord rec = parse_record(data, offset, stream.params.word_size, i);
        if (i % stream.params.entry_interval == 0 && !rec.uncompressed())
            throw CorruptStreamError("entry-point record is not uncompressed", i);
        stream.records.push_back(std::move(rec));
    }
    if (offset != data.size())
        throw CorruptStreamError("trailing bytes after last record");
    return stream;
}

} // namespace fmdelta
