#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fmdelta/codec.hpp"

namespace fmdelta {

/// Emission callback. Receives (1-based position, packet) in transmit order.
using TransmitSink = std::function<void(std::size_t, const RawPacket&)>;

/// Outcome of one sweep over the arena.
struct SweepReport {
    std::size_t packets_emitted = 0;
    std::size_t bytes_read = 0;
    std::size_t bytes_written = 0;
    unsigned updates_applied = 0;
    std::size_t cache_peak_records = 0;  // read-but-unwritten records, high water
    std::size_t cache_peak_bytes = 0;

    /// One CSV row: count,bytes_read,bytes_written,updates_applied.
    std::string csv_row() const;
};

inline constexpr const char* kSweepReportCsvHeader =
    "count,bytes_read,bytes_written,updates_applied";

/// A pending database mutation, built by the software layer and applied
/// by the engine during one sweep. Indices are 1-based.
struct UpdateRequest {
    enum class Kind { insert, remove };

    Kind kind = Kind::remove;
    std::size_t index = 0;                    // k: remove packet k / insert before k
    std::optional<DeltaRecord> new_packet;    // the inserted record (insert only)
    std::optional<DeltaRecord> repatched;     // re-encoded successor; absent when vacuous
};

/// Simulated on-chip packet memory: compressed records stored contiguously
/// from offset 0 in a fixed-capacity buffer, swept by a read-decompress-write
/// engine that can fold in one insert/remove per sweep.
///
/// Single-owner: callers serialize access; the transmit sink must not call
/// back into the arena.
class PacketArena {
public:
    /// Compresses the packets and places the records at offset 0.
    static PacketArena load(std::span<const RawPacket> packets,
                            const CodecParams& params, std::size_t capacity);

    /// Restores an arena from an "FMA1" snapshot.
    static PacketArena restore(std::span<const std::uint8_t> snapshot);

    /// "FMA1" snapshot: magic, u64be capacity, then the FMD1 stream.
    std::vector<std::uint8_t> snapshot() const;

    /// Emits every packet in order and rewrites each record unchanged.
    SweepReport sweep(const TransmitSink& sink);

    /// One sweep that atomically applies the request: emits the post-update
    /// sequence, splices records in place, and re-encodes records whose
    /// entry-point status changed. On any error the arena is unchanged.
    SweepReport sweep_with_update(const TransmitSink& sink, const UpdateRequest& req);

    /// Builds a removal request for packet k, with the successor re-encoded
    /// against its new predecessor (vacuous when k is the last packet).
    UpdateRequest prepare_removal(std::size_t k) const;

    /// Builds an insertion request placing `packet` before position k
    /// (k = count()+1 appends).
    UpdateRequest prepare_insertion(std::size_t k, const RawPacket& packet) const;

    /// Returns packet k and the number of record reads needed to reach it
    /// from the nearest preceding entry point. At most entry_interval reads.
    std::pair<RawPacket, std::size_t> random_access(std::size_t k) const;

    /// Decodes the whole arena (read-only scan; no writes, no emissions).
    std::vector<RawPacket> decode_all() const;

    std::size_t count() const { return count_; }
    std::size_t capacity() const { return capacity_; }
    std::size_t used_bytes() const { return used_; }
    const CodecParams& params() const { return params_; }

    /// Zero outside a sweep; exposed for the cursor invariants.
    std::size_t read_cursor() const { return read_cursor_; }
    std::size_t write_cursor() const { return write_cursor_; }

private:
    PacketArena() = default;

    struct UpdatePlan;
    struct SweepOutcome;

    SweepOutcome run_sweep(const UpdatePlan& plan, const TransmitSink* sink,
                           bool commit);
    SweepReport sweep_impl(const TransmitSink& sink, const UpdatePlan& plan);

    std::vector<std::uint8_t> memory_;
    std::size_t capacity_ = 0;
    std::size_t used_ = 0;
    std::size_t count_ = 0;
    CodecParams params_;
    std::vector<std::size_t> entry_offsets_;  // byte offset of every entry slot
    std::size_t read_cursor_ = 0;
    std::size_t write_cursor_ = 0;
    bool in_sweep_ = false;
};

} // namespace fmdelta
