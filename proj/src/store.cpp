#include "fmdelta/store.hpp"

#include <cstring>
#include <deque>
#include <string>

#include "fmdelta/bytes.hpp"

namespace fmdelta {

std::string SweepReport::csv_row() const {
    return std::to_string(packets_emitted) + "," + std::to_string(bytes_read) + "," +
           std::to_string(bytes_written) + "," + std::to_string(updates_applied);
}

namespace {

constexpr char kArenaMagic[4] = {'F', 'M', 'A', '1'};
constexpr char kStreamMagic[4] = {'F', 'M', 'D', '1'};
constexpr std::uint8_t kStreamVersion = 0x01;

/// The canonical stored form of a packet: uncompressed at entry slots,
/// otherwise the delta against its predecessor unless that is not
/// strictly smaller.
DeltaRecord canonical_record(const RawPacket* prev, const RawPacket& content,
                             bool entry_slot, unsigned word_size) {
    if (entry_slot || prev == nullptr)
        return encode_first(content);
    DeltaRecord delta = encode_delta(*prev, content, word_size);
    if (delta.wire_size() >= kRecordHeaderSize + content.length())
        return encode_first(content);
    return delta;
}

std::vector<std::uint8_t> serialize_record(const DeltaRecord& rec) {
    std::vector<std::uint8_t> out;
    out.reserve(rec.wire_size());
    append_record(out, rec);
    return out;
}

/// Round-trips a caller-supplied record through the wire format so that
/// malformed requests are rejected up front.
void check_well_formed(const DeltaRecord& rec, unsigned word_size, const char* what) {
    try {
        std::vector<std::uint8_t> buf = serialize_record(rec);
        std::size_t off = 0;
        parse_record(buf, off, word_size, CorruptStreamError::kNoIndex);
    } catch (const CorruptStreamError& e) {
        throw UsageError(std::string("malformed ") + what + " record: " + e.what());
    }
}

} // namespace

struct PacketArena::UpdatePlan {
    enum class Op { none, insert, remove };

    Op op = Op::none;
    std::size_t pos = 0;  // 0-based old-record index at the splice point
    const DeltaRecord* injected = nullptr;
    const DeltaRecord* repatched = nullptr;
};

struct PacketArena::SweepOutcome {
    SweepReport report;
    std::size_t new_used = 0;
    std::size_t new_count = 0;
    std::vector<std::size_t> new_entry_offsets;
};

PacketArena PacketArena::load(std::span<const RawPacket> packets,
                              const CodecParams& params, std::size_t capacity) {
    CompressedStream stream = compress_sequence(packets, params);

    PacketArena arena;
    arena.params_ = params;
    arena.capacity_ = capacity;

    const std::size_t required = compressed_size(stream);
    if (required > capacity)
        throw CapacityError(required, capacity);

    arena.memory_.assign(capacity, 0);
    std::vector<std::uint8_t> bytes;
    bytes.reserve(required);
    for (std::size_t i = 0; i < stream.records.size(); ++i) {
        if (i % params.entry_interval == 0)
            arena.entry_offsets_.push_back(bytes.size());
        append_record(bytes, stream.records[i]);
    }
    std::memcpy(arena.memory_.data(), bytes.data(), bytes.size());
    arena.used_ = bytes.size();
    arena.count_ = stream.records.size();
    return arena;
}

std::vector<std::uint8_t> PacketArena::snapshot() const {
    std::vector<std::uint8_t> out;
    out.reserve(4 + 8 + 14 + used_);
    out.insert(out.end(), kArenaMagic, kArenaMagic + 4);
    put_u64be(out, capacity_);
    out.insert(out.end(), kStreamMagic, kStreamMagic + 4);
    out.push_back(kStreamVersion);
    out.push_back(static_cast<std::uint8_t>(params_.word_size));
    put_u32be(out, params_.entry_interval);
    put_u32be(out, static_cast<std::uint32_t>(count_));
    out.insert(out.end(), memory_.begin(), memory_.begin() + used_);
    return out;
}

PacketArena PacketArena::restore(std::span<const std::uint8_t> snapshot) {
    constexpr std::size_t header = 4 + 8 + 4 + 1 + 1 + 4 + 4;
    if (snapshot.size() < header)
        throw CorruptStreamError("truncated arena snapshot");
    if (std::memcmp(snapshot.data(), kArenaMagic, 4) != 0)
        throw CorruptStreamError("bad magic, expected FMA1");
    if (std::memcmp(snapshot.data() + 12, kStreamMagic, 4) != 0)
        throw CorruptStreamError("bad magic, expected FMD1 after arena header");
    if (snapshot[16] != kStreamVersion)
        throw CorruptStreamError("unsupported stream version");

    PacketArena arena;
    arena.capacity_ = read_u64be(snapshot.data() + 4);
    arena.params_.word_size = snapshot[17];
    arena.params_.entry_interval = read_u32be(snapshot.data() + 18);
    validate_params(arena.params_);
    arena.count_ = read_u32be(snapshot.data() + 22);

    const std::size_t record_bytes = snapshot.size() - header;
    if (record_bytes > arena.capacity_)
        throw CorruptStreamError("snapshot records exceed the declared capacity");

    std::span<const std::uint8_t> records = snapshot.subspan(header);
    std::size_t offset = 0;
    for (std::size_t i = 0; i < arena.count_; ++i) {
        const std::size_t start = offset;
        DeltaRecord rec = parse_record(records, offset, arena.params_.word_size, i);
        if (i % arena.params_.entry_interval == 0) {
            if (!rec.uncompressed())
                throw CorruptStreamError("entry-point record is not uncompressed", i);
            arena.entry_offsets_.push_back(start);
        }
    }
    if (offset != record_bytes)
        throw CorruptStreamError("trailing bytes after last record");

    arena.memory_.assign(arena.capacity_, 0);
    std::memcpy(arena.memory_.data(), records.data(), record_bytes);
    arena.used_ = record_bytes;
    return arena;
}

PacketArena::SweepOutcome PacketArena::run_sweep(const UpdatePlan& plan,
                                                 const TransmitSink* sink,
                                                 bool commit) {
    struct Cached {
        std::vector<std::uint8_t> bytes;
        RawPacket content;
        bool was_entry_slot;
    };

    SweepOutcome outcome;
    SweepReport& report = outcome.report;

    std::deque<Cached> cache;
    std::size_t cache_bytes = 0;
    std::size_t read = 0;
    std::size_t write = 0;
    std::size_t old_read_count = 0;

    RawPacket prev_read;
    bool have_prev_read = false;
    RawPacket prev_write;
    bool have_prev_write = false;

    const std::span<const std::uint8_t> readable(memory_.data(), used_);

    auto read_one = [&] {
        const std::size_t idx = old_read_count;
        const std::size_t start = read;
        DeltaRecord rec = parse_record(readable, read, params_.word_size, idx);
        RawPacket content =
            decode_record(rec, have_prev_read ? &prev_read : nullptr, params_.word_size, idx);
        prev_read = content;
        have_prev_read = true;
        ++old_read_count;
        report.bytes_read += read - start;
        cache.push_back(Cached{
            std::vector<std::uint8_t>(memory_.begin() + start, memory_.begin() + read),
            std::move(content), idx % params_.entry_interval == 0});
        cache_bytes += read - start;
        report.cache_peak_records = std::max(report.cache_peak_records, cache.size());
        report.cache_peak_bytes = std::max(report.cache_peak_bytes, cache_bytes);
        if (commit)
            read_cursor_ = read;
    };

    auto front = [&]() -> Cached& {
        if (cache.empty())
            read_one();
        return cache.front();
    };

    auto pop = [&] {
        cache_bytes -= cache.front().bytes.size();
        cache.pop_front();
    };

    // Writes must never reach into unread memory. Read ahead until the
    // target range is clear (or everything has been read).
    auto ensure_readable = [&](std::size_t upto) {
        while (read < upto && old_read_count < count_)
            read_one();
    };

    auto write_record = [&](const std::vector<std::uint8_t>& bytes, bool entry_slot) {
        const std::size_t need = write + bytes.size();
        if (need > capacity_)
            throw CapacityError(need, capacity_);
        if (old_read_count < count_ && need > read)
            throw std::logic_error("sweep engine would overwrite unread records");
        if (entry_slot)
            outcome.new_entry_offsets.push_back(write);
        if (commit) {
            std::memcpy(memory_.data() + write, bytes.data(), bytes.size());
            write_cursor_ = need;
        }
        write = need;
        report.bytes_written += bytes.size();
    };

    const std::size_t slots = plan.op == UpdatePlan::Op::insert ? count_ + 1
                            : plan.op == UpdatePlan::Op::remove ? count_ - 1
                                                                : count_;

    for (std::size_t i = 0; i < slots; ++i) {
        const bool entry_slot = i % params_.entry_interval == 0;
        RawPacket content;
        std::vector<std::uint8_t> out_bytes;

        const bool injected_slot = plan.op == UpdatePlan::Op::insert && i == plan.pos;
        const bool repatched_slot =
            (plan.op == UpdatePlan::Op::insert && plan.pos < count_ && i == plan.pos + 1) ||
            (plan.op == UpdatePlan::Op::remove && i == plan.pos);

        if (injected_slot) {
            const RawPacket* prev = have_prev_write ? &prev_write : nullptr;
            try {
                content = decode_record(*plan.injected, prev, params_.word_size);
            } catch (const CorruptStreamError& e) {
                throw StaleRepatchError(
                    std::string("inserted record does not decode against its predecessor: ") +
                    e.what());
            }
            validate_packet(content);
            out_bytes = serialize_record(
                canonical_record(prev, content, entry_slot, params_.word_size));
        } else if (repatched_slot) {
            if (plan.op == UpdatePlan::Op::remove) {
                front();  // the record being removed; read it and drop it
                pop();
            }
            Cached& c = front();
            content = c.content;
            const RawPacket* prev = have_prev_write ? &prev_write : nullptr;
            RawPacket repatched_content;
            try {
                repatched_content = decode_record(*plan.repatched, prev, params_.word_size);
            } catch (const CorruptStreamError& e) {
                throw StaleRepatchError(
                    std::string("repatched record does not decode against its new predecessor: ") +
                    e.what());
            }
            if (repatched_content != content)
                throw StaleRepatchError(
                    "repatched record decodes to different packet content; "
                    "it was prepared against a stale arena state");
            out_bytes = serialize_record(
                canonical_record(prev, content, entry_slot, params_.word_size));
        } else {
            Cached& c = front();
            content = c.content;
            const bool old_uncompressed = (c.bytes[0] & kFlagUncompressed) != 0;
            if (entry_slot && !old_uncompressed) {
                out_bytes = serialize_record(encode_first(content));
            } else if (!entry_slot && old_uncompressed && c.was_entry_slot) {
                // Moved off an entry slot: restore the compressed form.
                const RawPacket* prev = have_prev_write ? &prev_write : nullptr;
                out_bytes = serialize_record(
                    canonical_record(prev, content, false, params_.word_size));
            } else {
                out_bytes = c.bytes;
            }
        }

        ensure_readable(write + out_bytes.size());
        write_record(out_bytes, entry_slot);
        if (!injected_slot)
            pop();

        if (commit && sink != nullptr)
            (*sink)(i + 1, content);
        ++report.packets_emitted;
        prev_write = std::move(content);
        have_prev_write = true;
    }

    // Drain anything the splice made unreachable (removal of the last record
    // leaves it unread).
    while (old_read_count < count_) {
        read_one();
        pop();
    }

    report.updates_applied = plan.op == UpdatePlan::Op::none ? 0 : 1;
    outcome.new_used = write;
    outcome.new_count = slots;
    return outcome;
}

SweepReport PacketArena::sweep_impl(const TransmitSink& sink, const UpdatePlan& plan) {
    if (in_sweep_)
        throw UsageError("a sweep is already in progress");
    in_sweep_ = true;

    struct Guard {
        PacketArena& arena;
        ~Guard() {
            arena.in_sweep_ = false;
            arena.read_cursor_ = 0;
            arena.write_cursor_ = 0;
        }
    } guard{*this};

    if (plan.op != UpdatePlan::Op::none) {
        // Validation pass: decodes everything, checks the repatch and the
        // post-update size, touches no memory. A failure here leaves the
        // arena exactly as it was.
        run_sweep(plan, nullptr, false);
    }

    SweepOutcome outcome = run_sweep(plan, &sink, true);
    used_ = outcome.new_used;
    count_ = outcome.new_count;
    entry_offsets_ = std::move(outcome.new_entry_offsets);
    return outcome.report;
}

SweepReport PacketArena::sweep(const TransmitSink& sink) {
    return sweep_impl(sink, UpdatePlan{});
}

SweepReport PacketArena::sweep_with_update(const TransmitSink& sink,
                                           const UpdateRequest& req) {
    UpdatePlan plan;
    if (req.kind == UpdateRequest::Kind::remove) {
        if (req.index < 1 || req.index > count_)
            throw UsageError("remove index " + std::to_string(req.index) +
                             " out of range [1, " + std::to_string(count_) + "]");
        if (req.new_packet.has_value())
            throw UsageError("a remove request cannot carry a new packet");
        plan.op = UpdatePlan::Op::remove;
        plan.pos = req.index - 1;
        const bool has_successor = plan.pos + 1 < count_;
        if (has_successor != req.repatched.has_value())
            throw UsageError(has_successor
                                 ? "remove request is missing the repatched successor"
                                 : "last-packet removal must not carry a repatched record");
        if (req.repatched) {
            check_well_formed(*req.repatched, params_.word_size, "repatched");
            plan.repatched = &*req.repatched;
        }
    } else {
        if (req.index < 1 || req.index > count_ + 1)
            throw UsageError("insert index " + std::to_string(req.index) +
                             " out of range [1, " + std::to_string(count_ + 1) + "]");
        if (!req.new_packet.has_value())
            throw UsageError("an insert request requires the new packet record");
        plan.op = UpdatePlan::Op::insert;
        plan.pos = req.index - 1;
        check_well_formed(*req.new_packet, params_.word_size, "new packet");
        plan.injected = &*req.new_packet;
        const bool displaces = plan.pos < count_;
        if (displaces != req.repatched.has_value())
            throw UsageError(displaces
                                 ? "insert request is missing the repatched displaced record"
                                 : "append must not carry a repatched record");
        if (req.repatched) {
            check_well_formed(*req.repatched, params_.word_size, "repatched");
            plan.repatched = &*req.repatched;
        }
    }
    return sweep_impl(sink, plan);
}

UpdateRequest PacketArena::prepare_removal(std::size_t k) const {
    if (k < 1 || k > count_)
        throw UsageError("remove index " + std::to_string(k) + " out of range [1, " +
                         std::to_string(count_) + "]");
    UpdateRequest req;
    req.kind = UpdateRequest::Kind::remove;
    req.index = k;
    if (k < count_) {
        RawPacket successor = random_access(k + 1).first;
        const bool entry_slot = (k - 1) % params_.entry_interval == 0;
        if (k == 1 || entry_slot) {
            req.repatched = encode_first(successor);
        } else {
            RawPacket predecessor = random_access(k - 1).first;
            req.repatched =
                canonical_record(&predecessor, successor, false, params_.word_size);
        }
    }
    return req;
}

UpdateRequest PacketArena::prepare_insertion(std::size_t k, const RawPacket& packet) const {
    if (k < 1 || k > count_ + 1)
        throw UsageError("insert index " + std::to_string(k) + " out of range [1, " +
                         std::to_string(count_ + 1) + "]");
    validate_packet(packet);

    UpdateRequest req;
    req.kind = UpdateRequest::Kind::insert;
    req.index = k;

    const bool entry_slot = (k - 1) % params_.entry_interval == 0;
    if (k == 1 || entry_slot) {
        req.new_packet = encode_first(packet);
    } else {
        RawPacket predecessor = random_access(k - 1).first;
        req.new_packet = canonical_record(&predecessor, packet, false, params_.word_size);
    }

    if (k <= count_) {
        RawPacket displaced = random_access(k).first;
        const bool displaced_entry = k % params_.entry_interval == 0;
        req.repatched =
            canonical_record(&packet, displaced, displaced_entry, params_.word_size);
    }
    return req;
}

std::pair<RawPacket, std::size_t> PacketArena::random_access(std::size_t k) const {
    if (in_sweep_)
        throw UsageError("random access rejected: a sweep is in progress");
    if (k < 1 || k > count_)
        throw UsageError("packet index " + std::to_string(k) + " out of range [1, " +
                         std::to_string(count_) + "]");

    const std::size_t target = k - 1;
    const std::size_t entry_slot = target / params_.entry_interval;
    const std::size_t first = entry_slot * params_.entry_interval;

    std::span<const std::uint8_t> readable(memory_.data(), used_);
    std::size_t offset = entry_offsets_[entry_slot];
    std::size_t reads = 0;
    RawPacket current;
    for (std::size_t idx = first; idx <= target; ++idx) {
        DeltaRecord rec = parse_record(readable, offset, params_.word_size, idx);
        current = decode_record(rec, idx == first ? nullptr : &current,
                                params_.word_size, idx);
        ++reads;
    }
    return {std::move(current), reads};
}

std::vector<RawPacket> PacketArena::decode_all() const {
    std::span<const std::uint8_t> readable(memory_.data(), used_);
    std::vector<RawPacket> packets;
    packets.reserve(count_);
    std::size_t offset = 0;
    for (std::size_t i = 0; i < count_; ++i) {
        DeltaRecord rec = parse_record(readable, offset, params_.word_size, i);
        packets.push_back(decode_record(rec, packets.empty() ? nullptr : &packets.back(),
                                        params_.word_size, i));
    }
    return packets;
}

} // namespace fmdelta
