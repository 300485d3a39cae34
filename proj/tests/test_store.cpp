#include <doctest.h>

#include <random>

#include "fmdelta/pktgen.hpp"
#include "fmdelta/store.hpp"

using namespace fmdelta;

namespace {

RawPacket pkt(std::initializer_list<std::uint8_t> bytes) {
    return RawPacket{std::vector<std::uint8_t>(bytes)};
}

std::vector<RawPacket> abc() {
    return {pkt({0x10, 0x11, 0x12, 0x13, 0x14, 0x15}),
            pkt({0x10, 0x11, 0x12, 0x13, 0x24, 0x25}),
            pkt({0x10, 0x11, 0x32, 0x33, 0x24, 0x25})};
}

struct Collector {
    std::vector<std::pair<std::size_t, RawPacket>> emissions;
    TransmitSink sink() {
        return [this](std::size_t k, const RawPacket& p) { emissions.emplace_back(k, p); };
    }
    std::vector<RawPacket> packets() const {
        std::vector<RawPacket> out;
        for (const auto& [k, p] : emissions)
            out.push_back(p);
        return out;
    }
};

} // namespace

TEST_CASE("load places records contiguously and reports counts") {
    PacketArena arena = PacketArena::load(abc(), CodecParams{2, 100}, 1024);
    CHECK(arena.count() == 3);
    CHECK(arena.capacity() == 1024);
    CHECK(arena.used_bytes() > 0);
    CHECK(arena.decode_all() == abc());
    CHECK(arena.read_cursor() == 0);
    CHECK(arena.write_cursor() == 0);
}

TEST_CASE("load rejects an arena that does not fit") {
    try {
        PacketArena::load(abc(), CodecParams{2, 100}, 10);
        FAIL("expected CapacityError");
    } catch (const CapacityError& e) {
        CHECK(e.available() == 10);
        CHECK(e.required() > 10);
    }
}

TEST_CASE("sweep emits every packet in order and rewrites records unchanged") {
    PacketArena arena = PacketArena::load(abc(), CodecParams{2, 100}, 1024);
    Collector first;
    SweepReport r1 = arena.sweep(first.sink());
    CHECK(first.packets() == abc());
    CHECK(first.emissions[0].first == 1);
    CHECK(first.emissions[2].first == 3);
    CHECK(r1.packets_emitted == 3);
    CHECK(r1.updates_applied == 0);
    CHECK(r1.bytes_read == arena.used_bytes());
    CHECK(r1.bytes_written == arena.used_bytes());
    CHECK(r1.cache_peak_records <= 2);

    Collector second;
    SweepReport r2 = arena.sweep(second.sink());
    CHECK(second.packets() == first.packets());
    CHECK(r2.bytes_read == r1.bytes_read);
    CHECK(arena.decode_all() == abc());
}

TEST_CASE("sweep report matches compressed_size when no update is pending") {
    std::vector<RawPacket> packets = abc();
    CodecParams params{2, 2};
    PacketArena arena = PacketArena::load(packets, params, 4096);
    const std::size_t expected = compressed_size(compress_sequence(packets, params));
    Collector c;
    SweepReport r = arena.sweep(c.sink());
    CHECK(r.bytes_read == expected);
    CHECK(r.bytes_written == expected);
    CHECK(r.csv_row() == "3," + std::to_string(expected) + "," + std::to_string(expected) + ",0");
}

TEST_CASE("removal splices the arena and skips the removed packet") {
    std::vector<RawPacket> packets = abc();
    PacketArena arena = PacketArena::load(packets, CodecParams{2, 100}, 1024);

    UpdateRequest req = arena.prepare_removal(2);
    Collector during;
    SweepReport r = arena.sweep_with_update(during.sink(), req);
    CHECK(r.updates_applied == 1);
    CHECK(r.packets_emitted == 2);

    std::vector<RawPacket> expected = {packets[0], packets[2]};
    CHECK(during.packets() == expected);
    CHECK(arena.count() == 2);
    CHECK(arena.decode_all() == expected);

    Collector after;
    arena.sweep(after.sink());
    CHECK(after.packets() == expected);

    // From-scratch rebuild matches byte for byte.
    PacketArena rebuilt = PacketArena::load(expected, CodecParams{2, 100}, 1024);
    CHECK(rebuilt.used_bytes() == arena.used_bytes());
    CHECK(rebuilt.decode_all() == arena.decode_all());
    CHECK(rebuilt.snapshot() == arena.snapshot());
}

TEST_CASE("insertion before position 1 makes the new packet the first record") {
    std::vector<RawPacket> packets = abc();
    PacketArena arena = PacketArena::load(packets, CodecParams{2, 100}, 1024);

    RawPacket x = pkt({0x77, 0x66, 0x55, 0x44});
    UpdateRequest req = arena.prepare_insertion(1, x);
    REQUIRE(req.new_packet.has_value());
    CHECK(req.new_packet->uncompressed());

    Collector during;
    SweepReport r = arena.sweep_with_update(during.sink(), req);
    CHECK(r.packets_emitted == 4);

    std::vector<RawPacket> expected = {x, packets[0], packets[1], packets[2]};
    CHECK(during.packets() == expected);
    CHECK(arena.decode_all() == expected);

    PacketArena rebuilt = PacketArena::load(expected, CodecParams{2, 100}, 1024);
    CHECK(rebuilt.snapshot() == arena.snapshot());
}

TEST_CASE("insertion emits the new packet in its position") {
    std::vector<RawPacket> packets = abc();
    PacketArena arena = PacketArena::load(packets, CodecParams{2, 100}, 1024);
    RawPacket x = pkt({0x10, 0x11, 0x12, 0x13, 0x14, 0x99});
    Collector during;
    arena.sweep_with_update(during.sink(), arena.prepare_insertion(2, x));
    std::vector<RawPacket> expected = {packets[0], x, packets[1], packets[2]};
    CHECK(during.packets() == expected);
    CHECK(during.emissions[1].first == 2);
}

TEST_CASE("a stale repatched record is rejected and the arena is untouched") {
    std::vector<RawPacket> packets = abc();
    PacketArena arena = PacketArena::load(packets, CodecParams{2, 100}, 1024);
    const std::vector<std::uint8_t> before = arena.snapshot();

    UpdateRequest req;
    req.kind = UpdateRequest::Kind::remove;
    req.index = 2;
    // Encoded against the wrong predecessor (packet 2 instead of packet 1).
    req.repatched = encode_delta(packets[1], packets[2], 2);

    Collector c;
    CHECK_THROWS_AS(arena.sweep_with_update(c.sink(), req), StaleRepatchError);
    CHECK(c.emissions.empty());
    CHECK(arena.snapshot() == before);
    CHECK(arena.count() == 3);
}

TEST_CASE("insert overflow reports capacity and leaves the arena unchanged") {
    std::vector<RawPacket> packets = abc();
    PacketArena arena =
        PacketArena::load(packets, CodecParams{2, 100}, compressed_size(compress_sequence(
                                                            packets, CodecParams{2, 100})));
    const std::vector<std::uint8_t> before = arena.snapshot();
    RawPacket big;
    big.bytes.assign(900, 0xEE);
    Collector c;
    CHECK_THROWS_AS(arena.sweep_with_update(c.sink(), arena.prepare_insertion(1, big)),
                    CapacityError);
    CHECK(c.emissions.empty());
    CHECK(arena.snapshot() == before);
}

TEST_CASE("prepare_removal boundaries") {
    std::vector<RawPacket> packets = abc();
    PacketArena arena = PacketArena::load(packets, CodecParams{2, 100}, 1024);

    UpdateRequest last = arena.prepare_removal(3);
    CHECK_FALSE(last.repatched.has_value());  // no successor

    UpdateRequest first = arena.prepare_removal(1);
    REQUIRE(first.repatched.has_value());
    CHECK(first.repatched->uncompressed());  // becomes the new first record

    UpdateRequest mid = arena.prepare_removal(2);
    REQUIRE(mid.repatched.has_value());
    CHECK(*mid.repatched == encode_delta(packets[0], packets[2], 2));

    CHECK_THROWS_AS(arena.prepare_removal(0), UsageError);
    CHECK_THROWS_AS(arena.prepare_removal(4), UsageError);
}

TEST_CASE("prepare_insertion boundaries") {
    std::vector<RawPacket> packets = abc();
    PacketArena arena = PacketArena::load(packets, CodecParams{2, 100}, 1024);

    UpdateRequest append = arena.prepare_insertion(4, pkt({1, 2, 3}));
    CHECK_FALSE(append.repatched.has_value());

    // Inserting a duplicate of its predecessor costs only the bitmap.
    UpdateRequest dup = arena.prepare_insertion(2, packets[0]);
    REQUIRE(dup.new_packet.has_value());
    CHECK_FALSE(dup.new_packet->uncompressed());
    CHECK(dup.new_packet->values.empty());

    CHECK_THROWS_AS(arena.prepare_insertion(0, pkt({1})), UsageError);
    CHECK_THROWS_AS(arena.prepare_insertion(5, pkt({1})), UsageError);
}

TEST_CASE("removing the last remaining packet leaves an empty arena") {
    std::vector<RawPacket> packets = {pkt({1, 2, 3, 4})};
    PacketArena arena = PacketArena::load(packets, CodecParams{2, 1}, 256);
    Collector c;
    SweepReport r = arena.sweep_with_update(c.sink(), arena.prepare_removal(1));
    CHECK(r.packets_emitted == 0);
    CHECK(arena.count() == 0);
    CHECK(arena.used_bytes() == 0);
    CHECK(arena.decode_all().empty());

    // And an empty arena accepts a fresh insertion.
    RawPacket x = pkt({9, 9, 9});
    Collector c2;
    arena.sweep_with_update(c2.sink(), arena.prepare_insertion(1, x));
    CHECK(arena.decode_all() == std::vector<RawPacket>{x});
}

TEST_CASE("random_access returns sweep-equal packets within the read bound") {
    DatasetSpec spec;
    spec.total_packets = 60;
    spec.seed = 99;
    spec.mode = ArrangeMode::ordered;
    std::vector<RawPacket> packets = generate(spec);

    CodecParams params{2, 10};
    PacketArena arena = PacketArena::load(packets, params, 1 << 20);

    Collector c;
    arena.sweep(c.sink());
    for (std::size_t k = 1; k <= packets.size(); ++k) {
        auto [packet, reads] = arena.random_access(k);
        CHECK(packet == c.emissions[k - 1].second);
        CHECK(reads == (k - 1) % 10 + 1);
        CHECK(reads <= 10);
    }
    auto [first, reads1] = arena.random_access(1);
    CHECK(reads1 == 1);

    CHECK_THROWS_AS(arena.random_access(0), UsageError);
    CHECK_THROWS_AS(arena.random_access(packets.size() + 1), UsageError);
}

TEST_CASE("random access also lands correctly after updates") {
    DatasetSpec spec;
    spec.total_packets = 40;
    spec.seed = 5;
    spec.mode = ArrangeMode::random;
    std::vector<RawPacket> packets = generate(spec);
    PacketArena arena = PacketArena::load(packets, CodecParams{2, 10}, 1 << 20);

    Collector c;
    arena.sweep_with_update(c.sink(), arena.prepare_removal(7));
    packets.erase(packets.begin() + 6);

    for (std::size_t k = 1; k <= packets.size(); ++k) {
        auto [packet, reads] = arena.random_access(k);
        CHECK(packet == packets[k - 1]);
        CHECK(reads <= 10);
    }
}

TEST_CASE("the sink must not reenter the arena") {
    PacketArena arena = PacketArena::load(abc(), CodecParams{2, 100}, 1024);
    bool threw = false;
    TransmitSink sink = [&](std::size_t, const RawPacket&) {
        try {
            arena.random_access(1);
        } catch (const UsageError&) {
            threw = true;
        }
    };
    arena.sweep(sink);
    CHECK(threw);
}

TEST_CASE("snapshot round-trips through restore") {
    DatasetSpec spec;
    spec.total_packets = 24;
    spec.seed = 3;
    spec.mode = ArrangeMode::ordered;
    std::vector<RawPacket> packets = generate(spec);
    PacketArena arena = PacketArena::load(packets, CodecParams{4, 6}, 8192);

    std::vector<std::uint8_t> snap = arena.snapshot();
    CHECK(snap[0] == 'F');
    CHECK(snap[1] == 'M');
    CHECK(snap[2] == 'A');
    CHECK(snap[3] == '1');

    PacketArena back = PacketArena::restore(snap);
    CHECK(back.capacity() == arena.capacity());
    CHECK(back.count() == arena.count());
    CHECK(back.params() == arena.params());
    CHECK(back.decode_all() == packets);
    CHECK(back.snapshot() == snap);

    std::vector<std::uint8_t> trunc(snap.begin(), snap.end() - 3);
    CHECK_THROWS_AS(PacketArena::restore(trunc), CorruptStreamError);
}

TEST_CASE("splice sequences match a from-scratch rebuild") {
    std::mt19937_64 rng(0xACE);
    DatasetSpec spec;
    spec.total_packets = 120;
    spec.seed = 11;
    spec.mode = ArrangeMode::random;
    std::vector<RawPacket> packets = generate(spec);

    for (std::uint32_t interval : {1u, 7u, 120u}) {
        std::vector<RawPacket> model = packets;
        CodecParams params{2, interval};
        PacketArena arena = PacketArena::load(model, params, 1 << 20);

        for (int op = 0; op < 30; ++op) {
            Collector c;
            if (rng() % 2 == 0 && model.size() > 1) {
                std::size_t k = 1 + rng() % model.size();
                arena.sweep_with_update(c.sink(), arena.prepare_removal(k));
                model.erase(model.begin() + (k - 1));
            } else {
                std::size_t k = 1 + rng() % (model.size() + 1);
                RawPacket x = model[rng() % model.size()];
                x.bytes[rng() % x.bytes.size()] ^= 0xFF;
                arena.sweep_with_update(c.sink(), arena.prepare_insertion(k, x));
                model.insert(model.begin() + (k - 1), x);
            }
            CHECK(c.packets() == model);  // update sweeps emit the new sequence
            REQUIRE(arena.decode_all() == model);

            PacketArena rebuilt = PacketArena::load(model, params, 1 << 20);
            REQUIRE(rebuilt.snapshot() == arena.snapshot());
        }
    }
}

TEST_CASE("identical arenas and requests sweep identically") {
    DatasetSpec spec;
    spec.total_packets = 80;
    spec.seed = 61;
    spec.mode = ArrangeMode::random;
    std::vector<RawPacket> packets = generate(spec);

    auto run_once = [&](Collector& c) {
        PacketArena arena = PacketArena::load(packets, CodecParams{2, 8}, 1 << 20);
        SweepReport r = arena.sweep_with_update(c.sink(), arena.prepare_removal(13));
        return std::tuple(r.bytes_read, r.bytes_written, r.cache_peak_records,
                          arena.snapshot());
    };
    Collector c1, c2;
    CHECK(run_once(c1) == run_once(c2));
    CHECK(c1.emissions == c2.emissions);
}

TEST_CASE("a 100k-packet ordered dataset fits a 6.4 MB arena with room to spare") {
    DatasetSpec spec;
    spec.total_packets = 100000;
    spec.seed = 42;
    spec.mode = ArrangeMode::ordered;
    std::vector<RawPacket> packets = generate(spec);

    CodecParams params;
    params.word_size = 2;
    params.entry_interval = static_cast<std::uint32_t>(packets.size());
    PacketArena arena = PacketArena::load(packets, params, 6400000);
    CHECK(arena.count() == 100000);
    CHECK(arena.used_bytes() ==
          compressed_size(compress_sequence(packets, params)));
    CHECK(arena.used_bytes() < 6400000 / 2 + 6400000 / 4);  // well under capacity
}

TEST_CASE("update requests are validated before anything runs") {
    PacketArena arena = PacketArena::load(abc(), CodecParams{2, 100}, 4096);

    UpdateRequest bad_index;
    bad_index.kind = UpdateRequest::Kind::remove;
    bad_index.index = 9;
    Collector c;
    CHECK_THROWS_AS(arena.sweep_with_update(c.sink(), bad_index), UsageError);

    UpdateRequest missing_new;
    missing_new.kind = UpdateRequest::Kind::insert;
    missing_new.index = 1;
    CHECK_THROWS_AS(arena.sweep_with_update(c.sink(), missing_new), UsageError);

    UpdateRequest missing_repatch;
    missing_repatch.kind = UpdateRequest::Kind::remove;
    missing_repatch.index = 1;  // has a successor, needs a repatch
    CHECK_THROWS_AS(arena.sweep_with_update(c.sink(), missing_repatch), UsageError);

    UpdateRequest malformed;
    malformed.kind = UpdateRequest::Kind::insert;
    malformed.index = 4;
    DeltaRecord junk;
    junk.flags = 0x01;
    junk.length = 5;
    junk.values = {1, 2};  // payload shorter than claimed
    malformed.new_packet = junk;
    CHECK_THROWS_AS(arena.sweep_with_update(c.sink(), malformed), UsageError);

    CHECK(arena.decode_all() == abc());
}
