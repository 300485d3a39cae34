#include "fmdelta/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <mutex>
#include <thread>

#include <zlib.h>

#include "fmdelta/io.hpp"

namespace fmdelta {

void validate_config(const BenchConfig& config) {
    validate_spec(config.dataset);
    if (config.repetitions < 1)
        throw UsageError("repetitions must be >= 1");
    if (config.word_sizes.empty())
        throw UsageError("at least one word size is required");
    for (unsigned w : config.word_sizes)
        if (!valid_word_size(w))
            throw UsageError("invalid word size " + std::to_string(w));
    for (int level : config.baseline_levels)
        if (level < 1 || level > 9)
            throw UsageError("baseline level must be in 1..9");
}

namespace {

std::uint64_t total_packet_bytes(std::span<const RawPacket> packets) {
    std::uint64_t total = 0;
    for (const RawPacket& p : packets)
        total += p.length();
    return total;
}

} // namespace

BenchResult ratio_fmdelta(std::span<const RawPacket> packets, unsigned word_size) {
    if (packets.empty())
        throw UsageError("cannot benchmark an empty dataset");
    CodecParams params;
    params.word_size = word_size;
    params.entry_interval = static_cast<std::uint32_t>(packets.size());

    CompressedStream stream = compress_sequence(packets, params);

    BenchResult r;
    r.algorithm = Algorithm::fm_delta;
    r.parameter = word_size;
    r.uncompressed_bytes = total_packet_bytes(packets);
    r.compressed_bytes = compressed_size(stream);
    r.ratio = static_cast<double>(r.uncompressed_bytes) /
              static_cast<double>(r.compressed_bytes);
    r.ratio_min = r.ratio_max = r.ratio;
    return r;
}

BenchResult ratio_baseline(std::span<const RawPacket> packets, int level) {
    if (packets.empty())
        throw UsageError("cannot benchmark an empty dataset");
    if (level < 1 || level > 9)
        throw UsageError("baseline level must be in 1..9");

    std::vector<std::uint8_t> input = build_fmp1_body(packets);
    uLongf bound = compressBound(static_cast<uLong>(input.size()));
    std::vector<std::uint8_t> output(bound);
    int rc = compress2(output.data(), &bound, input.data(),
                       static_cast<uLong>(input.size()), level);
    if (rc != Z_OK)
        throw Error("zlib compress2 failed with code " + std::to_string(rc));

    BenchResult r;
    r.algorithm = Algorithm::baseline;
    r.parameter = static_cast<unsigned>(level);
    r.uncompressed_bytes = total_packet_bytes(packets);
    r.compressed_bytes = bound;
    r.ratio = static_cast<double>(r.uncompressed_bytes) /
              static_cast<double>(r.compressed_bytes);
    r.ratio_min = r.ratio_max = r.ratio;
    return r;
}

namespace {

unsigned worker_count(std::size_t cells) {
    unsigned n = 0;
    if (const char* env = std::getenv("FMDELTA_BENCH_THREADS"))
        n = static_cast<unsigned>(std::strtoul(env, nullptr, 10));
    if (n == 0) {
        n = std::thread::hardware_concurrency();
        if (n == 0)
            n = 1;
    }
    return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(cells, 1)));
}

struct Cell {
    Algorithm algorithm;
    unsigned parameter;
    ArrangeMode mode;
    unsigned repetition;
};

} // namespace

std::vector<BenchResult> run(const BenchConfig& config) {
    validate_config(config);

    const ArrangeMode modes[] = {ArrangeMode::ordered, ArrangeMode::random};

    // Datasets are shared across cells: one per (mode, repetition).
    std::map<std::pair<int, unsigned>, std::vector<RawPacket>> datasets;
    for (ArrangeMode mode : modes) {
        for (unsigned rep = 0; rep < config.repetitions; ++rep) {
            DatasetSpec spec = config.dataset;
            spec.mode = mode;
            spec.seed = config.dataset.seed + rep;
            datasets.emplace(std::make_pair(static_cast<int>(mode), rep), generate(spec));
        }
    }

    std::vector<Cell> cells;
    for (ArrangeMode mode : modes)
        for (unsigned rep = 0; rep < config.repetitions; ++rep) {
            for (unsigned w : config.word_sizes)
                cells.push_back({Algorithm::fm_delta, w, mode, rep});
            for (int level : config.baseline_levels)
                cells.push_back({Algorithm::baseline, static_cast<unsigned>(level), mode, rep});
        }

    std::vector<BenchResult> cell_results(cells.size());
    std::vector<std::string> cell_errors(cells.size());
    std::atomic<std::size_t> next{0};

    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size())
                return;
            const Cell& cell = cells[i];
            const auto& packets =
                datasets.at({static_cast<int>(cell.mode), cell.repetition});
            try {
                cell_results[i] = cell.algorithm == Algorithm::fm_delta
                                      ? ratio_fmdelta(packets, cell.parameter)
                                      : ratio_baseline(packets, static_cast<int>(cell.parameter));
                cell_results[i].mode = cell.mode;
            } catch (const std::exception& e) {
                cell_errors[i] = e.what();
            }
        }
    };

    const unsigned workers = worker_count(cells.size());
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned t = 0; t < workers; ++t)
            pool.emplace_back(work);
        for (std::thread& t : pool)
            t.join();
    }

    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (!cell_errors[i].empty()) {
            const Cell& c = cells[i];
            throw Error(std::string("bench cell ") + to_string(c.algorithm) + "/" +
                        std::to_string(c.parameter) + "/" + to_string(c.mode) + "/seed+" +
                        std::to_string(c.repetition) + " failed: " + cell_errors[i]);
        }
    }

    // Aggregate repetitions: mean ratio, min/max, summed byte counters.
    std::vector<BenchResult> results;
    auto aggregate = [&](Algorithm algo, unsigned param, ArrangeMode mode) {
        BenchResult agg;
        agg.algorithm = algo;
        agg.parameter = param;
        agg.mode = mode;
        double sum = 0.0;
        unsigned n = 0;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const Cell& c = cells[i];
            if (c.algorithm != algo || c.parameter != param || c.mode != mode)
                continue;
            const BenchResult& r = cell_results[i];
            sum += r.ratio;
            agg.uncompressed_bytes += r.uncompressed_bytes;
            agg.compressed_bytes += r.compressed_bytes;
            agg.ratio_min = n == 0 ? r.ratio : std::min(agg.ratio_min, r.ratio);
            agg.ratio_max = n == 0 ? r.ratio : std::max(agg.ratio_max, r.ratio);
            ++n;
        }
        agg.ratio = sum / n;
        results.push_back(agg);
    };

    for (unsigned w : config.word_sizes)
        for (ArrangeMode mode : modes)
            aggregate(Algorithm::fm_delta, w, mode);
    for (int level : config.baseline_levels)
        for (ArrangeMode mode : modes)
            aggregate(Algorithm::baseline, static_cast<unsigned>(level), mode);
    return results;
}

const char* to_string(Algorithm a) {
    return a == Algorithm::fm_delta ? "fm-delta" : "baseline";
}

const char* to_string(ArrangeMode m) {
    return m == ArrangeMode::ordered ? "ordered" : "random";
}

std::string emit_csv(const std::vector<BenchResult>& results) {
    if (results.empty())
        throw UsageError("no results to emit");
    std::string out = "algorithm,parameter,mode,ratio,uncompressed_bytes,compressed_bytes\n";
    char buf[160];
    for (const BenchResult& r : results) {
        std::snprintf(buf, sizeof(buf), "%s,%u,%s,%.6f,%llu,%llu\n", to_string(r.algorithm),
                      r.parameter, to_string(r.mode), r.ratio,
                      static_cast<unsigned long long>(r.uncompressed_bytes),
                      static_cast<unsigned long long>(r.compressed_bytes));
        out += buf;
    }
    return out;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

} // namespace

std::string emit_svg(const std::vector<BenchResult>& results, Algorithm algorithm) {
    struct Point {
        unsigned parameter;
        double ratio;
    };
    std::map<int, std::vector<Point>> series;  // keyed by mode
    for (const BenchResult& r : results)
        if (r.algorithm == algorithm)
            series[static_cast<int>(r.mode)].push_back({r.parameter, r.ratio});
    if (series.empty())
        throw UsageError("no results for the requested algorithm");
    for (auto& [mode, points] : series)
        std::sort(points.begin(), points.end(),
                  [](const Point& a, const Point& b) { return a.parameter < b.parameter; });

    double ymax = 0.0;
    unsigned xmin = ~0u, xmax = 0;
    for (const auto& [mode, points] : series)
        for (const Point& p : points) {
            ymax = std::max(ymax, p.ratio);
            xmin = std::min(xmin, p.parameter);
            xmax = std::max(xmax, p.parameter);
        }
    ymax = std::max(1.0, std::ceil(ymax * 1.1 * 2.0) / 2.0);
    if (xmax == xmin)
        xmax = xmin + 1;

    const double width = 480, height = 320;
    const double left = 56, right = 16, top = 28, bottom = 44;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;
    auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * plot_w; };
    auto sy = [&](double y) { return top + (1.0 - y / ymax) * plot_h; };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) +
           "\" height=\"" + fmt(height) + "\" viewBox=\"0 0 " + fmt(width) + " " +
           fmt(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    const std::string title = std::string(to_string(algorithm)) +
                              (algorithm == Algorithm::fm_delta
                                   ? ": compression ratio vs. word size"
                                   : ": compression ratio vs. level");
    svg += "<text x=\"" + fmt(width / 2) +
           "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
           title + "</text>\n";

    // axes
    svg += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(top) + "\" x2=\"" + fmt(left) +
           "\" y2=\"" + fmt(top + plot_h) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(top + plot_h) + "\" x2=\"" +
           fmt(left + plot_w) + "\" y2=\"" + fmt(top + plot_h) + "\" stroke=\"black\"/>\n";

    for (int i = 0; i <= 4; ++i) {
        const double y = ymax * i / 4.0;
        svg += "<text x=\"" + fmt(left - 6) + "\" y=\"" + fmt(sy(y) + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" +
               fmt(y) + "</text>\n";
        svg += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(sy(y)) + "\" x2=\"" +
               fmt(left + plot_w) + "\" y2=\"" + fmt(sy(y)) +
               "\" stroke=\"#dddddd\"/>\n";
    }
    for (const auto& [mode, points] : series) {
        for (const Point& p : points) {
            svg += "<text x=\"" + fmt(sx(p.parameter)) + "\" y=\"" +
                   fmt(top + plot_h + 16) +
                   "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" +
                   std::to_string(p.parameter) + "</text>\n";
        }
        break;  // tick labels once
    }

    int color_index = 0;
    const char* colors[] = {"#1f77b4", "#d62728"};
    for (const auto& [mode, points] : series) {
        std::string poly;
        for (const Point& p : points)
            poly += fmt(sx(p.parameter)) + "," + fmt(sy(p.ratio)) + " ";
        const char* color = colors[color_index % 2];
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"2\" points=\"" + poly + "\"/>\n";
        for (const Point& p : points)
            svg += "<circle cx=\"" + fmt(sx(p.parameter)) + "\" cy=\"" + fmt(sy(p.ratio)) +
                   "\" r=\"3\" fill=\"" + color + "\"/>\n";
        svg += "<text x=\"" + fmt(left + plot_w - 8) + "\" y=\"" +
               fmt(top + 14 + 14 * color_index) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" +
               color + "\">" + to_string(static_cast<ArrangeMode>(mode)) + "</text>\n";
        ++color_index;
    }
    svg += "</svg>\n";
    return svg;
}

} // namespace fmdelta
