#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fmdelta/errors.hpp"

namespace fmdelta {

/// Jumbo-frame ceiling; packets longer than this are rejected everywhere.
inline constexpr std::size_t kMaxPacketLength = 9216;

/// Per-record header on the wire: 1 flags byte + 2-byte big-endian length.
inline constexpr std::size_t kRecordHeaderSize = 3;

/// flags bit 0: record payload is the raw packet (entry point / fallback).
inline constexpr std::uint8_t kFlagUncompressed = 0x01;

/// An uncompressed packet: a plain byte sequence, 1..kMaxPacketLength bytes.
struct RawPacket {
    std::vector<std::uint8_t> bytes;

    std::size_t length() const { return bytes.size(); }

    bool operator==(const RawPacket&) const = default;
};

/// Throws UsageError unless 1 <= packet.length() <= kMaxPacketLength.
void validate_packet(const RawPacket& packet);

/// True for the word sizes the codec supports: 1, 2, 4, 8, 16.
bool valid_word_size(unsigned word_size);

struct CodecParams {
    unsigned word_size = 2;        // comparison granularity in bytes
    std::uint32_t entry_interval = 1;  // every n-th record stays uncompressed

    bool operator==(const CodecParams&) const = default;
};

/// Throws UsageError on invalid word size or a zero entry interval.
void validate_params(const CodecParams& params);

/// One stored packet. Either an uncompressed record (flags bit 0 set,
/// `values` holds the raw packet, `bitmap` empty) or a delta record
/// (`bitmap` holds one bit per word, MSB-first, zero-padded to a byte;
/// `values` holds the bytes of every word whose bit is 0, in word order).
struct DeltaRecord {
    std::uint8_t flags = kFlagUncompressed;
    std::uint16_t length = 0;            // uncompressed packet length in bytes
    std::vector<std::uint8_t> bitmap;
    std::vector<std::uint8_t> values;

    bool uncompressed() const { return (flags & kFlagUncompressed) != 0; }

    /// Serialized size: header + bitmap + values.
    std::size_t wire_size() const {
        return kRecordHeaderSize + bitmap.size() + values.size();
    }

    bool operator==(const DeltaRecord&) const = default;
};

struct CompressedStream {
    CodecParams params;
    std::vector<DeltaRecord> records;

    std::size_t count() const { return records.size(); }
};

/// Number of words a packet of `length` bytes splits into (last may be partial).
inline std::size_t word_count(std::size_t length, unsigned word_size) {
    return (length + word_size - 1) / word_size;
}

/// Bytes needed for a packed bitmap of `bits` bits.
inline std::size_t bitmap_bytes(std::size_t bits) {
    return (bits + 7) / 8;
}

// --- record-level operations ------------------------------------------

/// Stores a packet verbatim (the form of the first record and of every
/// entry point).
DeltaRecord encode_first(const RawPacket& packet);

/// Delta-encodes `curr` against `prev`. Bitmap bit j is 1 iff word j of
/// `curr` exists entirely within `prev` and matches it byte for byte;
/// words with bit 0 land in `values` in ascending order. A trailing
/// partial word occupies exactly its own byte count.
DeltaRecord encode_delta(const RawPacket& prev, const RawPacket& curr,
                         unsigned word_size);

/// Inverse of encode_delta. `record_index` only labels errors.
RawPacket decode_delta(const DeltaRecord& record, const RawPacket& prev,
                       unsigned word_size,
                       std::size_t record_index = CorruptStreamError::kNoIndex);

/// Decodes any record; `prev` may be null for uncompressed records.
RawPacket decode_record(const DeltaRecord& record, const RawPacket* prev,
                        unsigned word_size,
                        std::size_t record_index = CorruptStreamError::kNoIndex);

// --- sequence-level operations ----------------------------------------

/// Compresses a packet sequence. Record i is stored uncompressed when
/// i % entry_interval == 0, or when the delta form would not be strictly
/// smaller than the uncompressed form (incompressibility fallback);
/// otherwise it is a delta against packet i-1.
CompressedStream compress_sequence(std::span<const RawPacket> packets,
                                   const CodecParams& params);

/// Recovers the original packet sequence. Errors carry the failing
/// record index.
std::vector<RawPacket> decompress_sequence(const CompressedStream& stream);

/// Total serialized byte count of all records, headers included. The
/// stream-file header is not part of this figure.
std::size_t compressed_size(const CompressedStream& stream);

// --- wire format --------------------------------------------------------

/// Appends one record in wire form: flags, u16be length, bitmap, values.
void append_record(std::vector<std::uint8_t>& out, const DeltaRecord& record);

/// Parses one record starting at `offset`, which is advanced past it.
/// Validates flags, length bounds, and the bitmap/values byte accounting.
DeltaRecord parse_record(std::span<const std::uint8_t> data, std::size_t& offset,
                         unsigned word_size, std::size_t record_index);

/// Serialized stream: magic "FMD1", version 0x01, u8 word_size,
/// u32be entry_interval, u32be count, records back to back.
std::vector<std::uint8_t> serialize_stream(const CompressedStream& stream);

/// Parses and fully validates an "FMD1" byte stream.
CompressedStream parse_stream(std::span<const std::uint8_t> data);

} // namespace fmdelta
