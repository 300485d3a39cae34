#include <doctest.h>

#include <random>

#include "fmdelta/bench.hpp"

using namespace fmdelta;

namespace {

BenchConfig tiny_config(unsigned repetitions = 1) {
    BenchConfig config;
    config.dataset.total_packets = 400;
    config.dataset.seed = 10;
    config.repetitions = repetitions;
    return config;
}

} // namespace

TEST_CASE("ratio_fmdelta on identical packets matches the record arithmetic") {
    const std::size_t n = 50, len = 100;
    const unsigned w = 2;
    std::vector<RawPacket> packets(n);
    for (auto& p : packets)
        p.bytes.assign(len, 0x42);

    BenchResult r = ratio_fmdelta(packets, w);
    // One raw record, then bitmap-only deltas.
    const std::size_t delta_size = 3 + ((len / w) + 7) / 8;
    const std::size_t expected = (3 + len) + (n - 1) * delta_size;
    CHECK(r.uncompressed_bytes == n * len);
    CHECK(r.compressed_bytes == expected);
    CHECK(r.ratio == doctest::Approx(static_cast<double>(n * len) / expected));
    CHECK(r.ratio > 7.0);
}

TEST_CASE("ratio_fmdelta on a single packet is below one") {
    std::vector<RawPacket> one = {RawPacket{std::vector<std::uint8_t>(80, 1)}};
    BenchResult r = ratio_fmdelta(one, 2);
    CHECK(r.compressed_bytes == 83);
    CHECK(r.ratio == doctest::Approx(80.0 / 83.0));
}

TEST_CASE("ratio_baseline stays below one on incompressible data") {
    std::mt19937_64 rng(6);
    std::vector<RawPacket> packets(40);
    for (auto& p : packets) {
        p.bytes.resize(1024);
        for (auto& b : p.bytes)
            b = static_cast<std::uint8_t>(rng());
    }
    BenchResult r = ratio_baseline(packets, 9);
    CHECK(r.ratio < 1.0);
    CHECK(r.ratio > 0.9);
}

TEST_CASE("ratio_baseline validates its level") {
    std::vector<RawPacket> one = {RawPacket{{1, 2, 3}}};
    CHECK_THROWS_AS(ratio_baseline(one, 0), UsageError);
    CHECK_THROWS_AS(ratio_baseline(one, 10), UsageError);
}

TEST_CASE("config validation") {
    BenchConfig config = tiny_config();
    config.repetitions = 0;
    CHECK_THROWS_AS(run(config), UsageError);

    config = tiny_config();
    config.word_sizes.clear();
    CHECK_THROWS_AS(run(config), UsageError);

    config = tiny_config();
    config.word_sizes = {3};
    CHECK_THROWS_AS(run(config), UsageError);

    config = tiny_config();
    config.baseline_levels = {0};
    CHECK_THROWS_AS(run(config), UsageError);
}

TEST_CASE("run produces one result per algorithm/parameter/mode") {
    std::vector<BenchResult> results = run(tiny_config());
    CHECK(results.size() == 2 * (5 + 9));

    std::size_t fm = 0, base = 0;
    for (const BenchResult& r : results) {
        if (r.algorithm == Algorithm::fm_delta)
            ++fm;
        else
            ++base;
        CHECK(r.ratio == doctest::Approx(static_cast<double>(r.uncompressed_bytes) /
                                         static_cast<double>(r.compressed_bytes)));
    }
    CHECK(fm == 10);
    CHECK(base == 18);
}

TEST_CASE("run with repetitions averages per-seed ratios") {
    BenchConfig config = tiny_config(3);
    config.word_sizes = {2};
    config.baseline_levels = {6};
    std::vector<BenchResult> results = run(config);
    REQUIRE(results.size() == 4);

    for (const BenchResult& agg : results) {
        double sum = 0.0;
        for (unsigned rep = 0; rep < 3; ++rep) {
            DatasetSpec spec = config.dataset;
            spec.seed = config.dataset.seed + rep;
            spec.mode = agg.mode;
            std::vector<RawPacket> packets = generate(spec);
            BenchResult cell = agg.algorithm == Algorithm::fm_delta
                                   ? ratio_fmdelta(packets, agg.parameter)
                                   : ratio_baseline(packets, static_cast<int>(agg.parameter));
            sum += cell.ratio;
        }
        CHECK(agg.ratio == doctest::Approx(sum / 3.0));
        CHECK(agg.ratio_min <= agg.ratio);
        CHECK(agg.ratio_max >= agg.ratio);
    }
}

TEST_CASE("identical configs emit identical CSV bytes") {
    std::string a = emit_csv(run(tiny_config()));
    std::string b = emit_csv(run(tiny_config()));
    CHECK(a == b);
}

TEST_CASE("emit_csv layout") {
    std::vector<BenchResult> results = run(tiny_config());
    std::string csv = emit_csv(results);

    CHECK(csv.rfind("algorithm,parameter,mode,ratio,uncompressed_bytes,compressed_bytes\n",
                    0) == 0);
    std::size_t lines = 0;
    for (char c : csv)
        if (c == '\n')
            ++lines;
    CHECK(lines == 29);  // header + 28 rows

    CHECK_THROWS_AS(emit_csv({}), UsageError);
}

TEST_CASE("emit_svg draws two series per algorithm") {
    std::vector<BenchResult> results = run(tiny_config());
    for (Algorithm algo : {Algorithm::fm_delta, Algorithm::baseline}) {
        std::string svg = emit_svg(results, algo);
        std::size_t series = 0;
        for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos;
             pos = svg.find("<polyline", pos + 1))
            ++series;
        CHECK(series == 2);
        CHECK(svg.find("ordered") != std::string::npos);
        CHECK(svg.find("random") != std::string::npos);
    }
}
