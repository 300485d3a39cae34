#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fmdelta/codec.hpp"
#include "fmdelta/pktgen.hpp"

namespace fmdelta {

enum class Algorithm { fm_delta, baseline };

/// Compression ratio of one (algorithm, parameter, mode) cell. For
/// repeated runs, `ratio` is the arithmetic mean over seeds and the byte
/// counters are sums.
struct BenchResult {
    Algorithm algorithm = Algorithm::fm_delta;
    unsigned parameter = 0;  // word size (fm-delta) or level (baseline)
    ArrangeMode mode = ArrangeMode::ordered;
    double ratio = 0.0;
    std::uint64_t uncompressed_bytes = 0;
    std::uint64_t compressed_bytes = 0;
    double ratio_min = 0.0;  // across seeds; equals ratio for one repetition
    double ratio_max = 0.0;
};

struct BenchConfig {
    DatasetSpec dataset;                        // mode is ignored; both are run
    std::vector<unsigned> word_sizes = {1, 2, 4, 8, 16};
    std::vector<int> baseline_levels = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    unsigned repetitions = 1;                   // seeds seed, seed+1, ...
};

void validate_config(const BenchConfig& config);

/// Delta-compresses the whole sequence with a single entry point and
/// reports uncompressed packet bytes over serialized record bytes.
BenchResult ratio_fmdelta(std::span<const RawPacket> packets, unsigned word_size);

/// DEFLATE (zlib) over the length-prefixed packet concatenation at the
/// given level 1..9, with the same uncompressed-bytes definition.
BenchResult ratio_baseline(std::span<const RawPacket> packets, int level);

/// Runs the whole grid: both algorithms, every parameter, ordered and
/// random arrangements, averaged over `repetitions` seeds. Cells run in
/// parallel; FMDELTA_BENCH_THREADS caps the worker count (0 = auto).
std::vector<BenchResult> run(const BenchConfig& config);

const char* to_string(Algorithm a);
const char* to_string(ArrangeMode m);

/// CSV with header algorithm,parameter,mode,ratio,uncompressed_bytes,compressed_bytes.
std::string emit_csv(const std::vector<BenchResult>& results);

/// An SVG line chart of ratio vs. parameter for one algorithm, with one
/// series per arrangement mode.
std::string emit_svg(const std::vector<BenchResult>& results, Algorithm algorithm);

} // namespace fmdelta
