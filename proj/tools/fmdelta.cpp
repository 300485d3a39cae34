#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fmdelta/bench.hpp"
#include "fmdelta/bytes.hpp"
#include "fmdelta/codec.hpp"
#include "fmdelta/io.hpp"
#include "fmdelta/pktgen.hpp"
#include "fmdelta/store.hpp"

namespace {

using namespace fmdelta;

// Exit codes: 0 success, 1 usage error, 2 data/corruption error, 3 capacity error.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitCapacity = 3;

ArrangeMode parse_mode(const std::string& mode) {
    if (mode == "ordered") return ArrangeMode::ordered;
    if (mode == "random") return ArrangeMode::random;
    throw UsageError("mode must be 'ordered' or 'random'");
}

std::vector<std::uint8_t> encode_dataset(std::span<const RawPacket> packets,
                                         const std::string& format) {
    if (format == "pcap")
        return build_pcap(packets);
    if (format == "fmp1")
        return build_fmp1(packets);
    throw UsageError("format must be 'pcap' or 'fmp1'");
}

// entry-interval 0 selects a single entry point (the first record).
CodecParams resolve_params(unsigned word_size, std::uint64_t entry_interval,
                           std::size_t packet_count) {
    if (entry_interval > 0xFFFFFFFFull || packet_count > 0xFFFFFFFFull)
        throw UsageError("entry interval and packet count must fit in 32 bits");
    CodecParams params;
    params.word_size = word_size;
    params.entry_interval = entry_interval == 0
                                ? static_cast<std::uint32_t>(packet_count)
                                : static_cast<std::uint32_t>(entry_interval);
    validate_params(params);
    return params;
}

int cmd_generate(std::size_t count, std::uint64_t seed, const std::string& mode,
                 std::size_t mac_pool, std::size_t meg_group, const std::string& out,
                 const std::string& format) {
    DatasetSpec spec;
    spec.total_packets = count;
    spec.seed = seed;
    spec.mode = parse_mode(mode);
    spec.mac_pool_size = mac_pool;
    spec.meg_group_size = meg_group;

    std::vector<RawPacket> packets = generate(spec);
    std::vector<std::uint8_t> data = encode_dataset(packets, format);
    write_file(out, data);

    std::uint64_t payload = 0;
    for (const RawPacket& p : packets)
        payload += p.length();
    std::printf("fmdelta generate ok count=%zu bytes=%llu file_bytes=%zu out=%s\n",
                packets.size(), static_cast<unsigned long long>(payload), data.size(),
                out.c_str());
    return kExitOk;
}

int cmd_compress(const std::string& in, const std::string& out, unsigned word_size,
                 std::uint64_t entry_interval) {
    std::vector<RawPacket> packets = parse_dataset(read_file(in));
    CodecParams params = resolve_params(word_size, entry_interval, packets.size());

    CompressedStream stream = compress_sequence(packets, params);
    std::vector<std::uint8_t> data = serialize_stream(stream);
    write_file(out, data);

    std::uint64_t payload = 0;
    for (const RawPacket& p : packets)
        payload += p.length();
    const std::size_t compressed = compressed_size(stream);
    std::printf("fmdelta compress ok count=%zu uncompressed=%llu compressed=%zu "
                "ratio=%.4f word_size=%u entry_interval=%u out=%s\n",
                packets.size(), static_cast<unsigned long long>(payload), compressed,
                static_cast<double>(payload) / static_cast<double>(compressed),
                params.word_size, params.entry_interval, out.c_str());
    return kExitOk;
}

int cmd_decompress(const std::string& in, const std::string& out,
                   const std::string& format) {
    CompressedStream stream = parse_stream(read_file(in));
    std::vector<RawPacket> packets = decompress_sequence(stream);
    std::vector<std::uint8_t> data = encode_dataset(packets, format);
    write_file(out, data);

    std::printf("fmdelta decompress ok count=%zu file_bytes=%zu out=%s\n",
                packets.size(), data.size(), out.c_str());
    return kExitOk;
}

int cmd_simulate(const std::string& in, std::uint64_t capacity, unsigned word_size,
                 std::uint64_t entry_interval, const std::string& script_path,
                 const std::string& report_path, const std::string& snapshot_out) {
    std::vector<std::uint8_t> data = read_file(in);

    PacketArena arena = [&] {
        if (detect_format(data) == FileFormat::fma1)
            return PacketArena::restore(data);
        std::vector<RawPacket> packets = parse_dataset(data);
        if (capacity == 0)
            throw UsageError("--capacity is required when loading a dataset");
        CodecParams params = resolve_params(word_size, entry_interval, packets.size());
        return PacketArena::load(packets, params, capacity);
    }();

    std::ofstream report;
    if (!report_path.empty()) {
        report.open(report_path, std::ios::trunc);
        if (!report)
            throw Error("cannot open " + report_path + " for writing");
        report << kSweepReportCsvHeader << "\n";
    }

    TransmitSink sink = [](std::size_t k, const RawPacket& packet) {
        std::printf("emit k=%zu len=%zu data=%s\n", k, packet.length(),
                    to_hex(packet.bytes).c_str());
    };

    auto log_sweep = [&](const SweepReport& r) {
        std::printf("sweep ok count=%zu bytes_read=%zu bytes_written=%zu "
                    "updates_applied=%u cache_records=%zu\n",
                    r.packets_emitted, r.bytes_read, r.bytes_written, r.updates_applied,
                    r.cache_peak_records);
        if (report.is_open())
            report << r.csv_row() << "\n";
    };

    std::size_t sweeps = 0;
    if (!script_path.empty()) {
        std::ifstream script(script_path);
        if (!script)
            throw Error("cannot open script " + script_path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(script, line)) {
            ++line_no;
            std::istringstream iss(line);
            std::string op;
            if (!(iss >> op) || op[0] == '#')
                continue;
            try {
                if (op == "sweep") {
                    log_sweep(arena.sweep(sink));
                    ++sweeps;
                } else if (op == "remove") {
                    std::size_t k;
                    if (!(iss >> k))
                        throw UsageError("remove needs an index");
                    log_sweep(arena.sweep_with_update(sink, arena.prepare_removal(k)));
                    ++sweeps;
                } else if (op == "insert") {
                    std::size_t k;
                    std::string hex;
                    if (!(iss >> k >> hex))
                        throw UsageError("insert needs an index and hex bytes");
                    RawPacket packet;
                    if (!from_hex(hex, packet.bytes))
                        throw UsageError("invalid hex packet");
                    log_sweep(arena.sweep_with_update(sink, arena.prepare_insertion(k, packet)));
                    ++sweeps;
                } else if (op == "access") {
                    std::size_t k;
                    if (!(iss >> k))
                        throw UsageError("access needs an index");
                    auto [packet, reads] = arena.random_access(k);
                    std::printf("access ok k=%zu reads=%zu len=%zu data=%s\n", k, reads,
                                packet.length(), to_hex(packet.bytes).c_str());
                } else {
                    throw UsageError("unknown script op '" + op + "'");
                }
            } catch (const Error& e) {
                throw UsageError("script line " + std::to_string(line_no) + ": " + e.what());
            }
        }
    }

    if (!snapshot_out.empty())
        write_file(snapshot_out, arena.snapshot());

    std::printf("fmdelta simulate ok packets=%zu used=%zu capacity=%zu sweeps=%zu\n",
                arena.count(), arena.used_bytes(), arena.capacity(), sweeps);
    return kExitOk;
}

BenchConfig load_bench_config(const std::string& path) {
    BenchConfig config;
    config.dataset.total_packets = 100000;
    config.dataset.seed = 1;
    if (path.empty())
        return config;

    nlohmann::json j = nlohmann::json::parse(std::ifstream(path), nullptr, true, true);
    if (j.contains("total_packets")) config.dataset.total_packets = j["total_packets"];
    if (j.contains("seed")) config.dataset.seed = j["seed"];
    if (j.contains("mac_pool_size")) config.dataset.mac_pool_size = j["mac_pool_size"];
    if (j.contains("meg_group_size")) config.dataset.meg_group_size = j["meg_group_size"];
    if (j.contains("vlan_choices"))
        config.dataset.vlan_choices = j["vlan_choices"].get<std::vector<unsigned>>();
    if (j.contains("word_sizes"))
        config.word_sizes = j["word_sizes"].get<std::vector<unsigned>>();
    if (j.contains("baseline_levels"))
        config.baseline_levels = j["baseline_levels"].get<std::vector<int>>();
    if (j.contains("repetitions")) config.repetitions = j["repetitions"];
    return config;
}

int cmd_bench(const std::string& config_path, const std::string& csv_path,
              const std::string& plot_prefix) {
    BenchConfig config = load_bench_config(config_path);
    std::vector<BenchResult> results = run(config);

    std::string csv = emit_csv(results);
    write_file(csv_path, std::vector<std::uint8_t>(csv.begin(), csv.end()));

    if (!plot_prefix.empty()) {
        for (Algorithm algo : {Algorithm::fm_delta, Algorithm::baseline}) {
            std::string svg = emit_svg(results, algo);
            write_file(plot_prefix + "-" + to_string(algo) + ".svg",
                       std::vector<std::uint8_t>(svg.begin(), svg.end()));
        }
    }

    double best_ratio = 0.0;
    unsigned best_word = 0;
    for (const BenchResult& r : results)
        if (r.algorithm == Algorithm::fm_delta && r.mode == ArrangeMode::ordered &&
            r.ratio > best_ratio) {
            best_ratio = r.ratio;
            best_word = r.parameter;
        }
    std::printf("fmdelta bench ok results=%zu csv=%s best_word_size=%u "
                "best_ordered_ratio=%.4f\n",
                results.size(), csv_path.c_str(), best_word, best_ratio);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"FM-Delta: delta compression for fault-management keepalive packets"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "synthesize a CCM/BFD keepalive dataset");
    std::size_t gen_count = 100000;
    std::uint64_t gen_seed = 1;
    std::string gen_mode = "random";
    std::size_t gen_mac_pool = 32;
    std::size_t gen_meg_group = 3;
    std::string gen_out;
    std::string gen_format = "fmp1";
    gen->add_option("--count", gen_count, "packet count (even)")->capture_default_str();
    gen->add_option("--seed", gen_seed, "RNG seed")->capture_default_str();
    gen->add_option("--mode", gen_mode, "ordered|random")->capture_default_str();
    gen->add_option("--mac-pool-size", gen_mac_pool, "source MAC pool size")
        ->capture_default_str();
    gen->add_option("--meg-group-size", gen_meg_group, "CCMs sharing one MEG ID")
        ->capture_default_str();
    gen->add_option("--out", gen_out, "output path")->required();
    gen->add_option("--format", gen_format, "fmp1|pcap")->capture_default_str();

    // compress
    auto* cmp = app.add_subcommand("compress", "delta-compress a dataset into FMD1");
    std::string cmp_in, cmp_out;
    unsigned cmp_word = 2;
    std::uint64_t cmp_interval = 0;
    cmp->add_option("--in", cmp_in, "input dataset (fmp1 or pcap)")->required();
    cmp->add_option("--out", cmp_out, "output FMD1 path")->required();
    cmp->add_option("--word-size", cmp_word, "1|2|4|8|16")->capture_default_str();
    cmp->add_option("--entry-interval", cmp_interval,
                    "records between entry points; 0 = single entry point")
        ->capture_default_str();

    // decompress
    auto* dec = app.add_subcommand("decompress", "decode an FMD1 stream");
    std::string dec_in, dec_out, dec_format = "fmp1";
    dec->add_option("--in", dec_in, "input FMD1 path")->required();
    dec->add_option("--out", dec_out, "output dataset path")->required();
    dec->add_option("--format", dec_format, "fmp1|pcap")->capture_default_str();

    // simulate
    auto* sim = app.add_subcommand("simulate", "run the packet-store engine");
    std::string sim_in, sim_script, sim_report, sim_snapshot;
    std::uint64_t sim_capacity = 0;
    unsigned sim_word = 2;
    std::uint64_t sim_interval = 0;
    sim->add_option("--in", sim_in, "dataset (fmp1/pcap) or arena snapshot (fma1)")
        ->required();
    sim->add_option("--capacity", sim_capacity, "arena capacity in bytes");
    sim->add_option("--word-size", sim_word, "1|2|4|8|16")->capture_default_str();
    sim->add_option("--entry-interval", sim_interval,
                    "records between entry points; 0 = single entry point")
        ->capture_default_str();
    sim->add_option("--script", sim_script,
                    "ops file: sweep | remove <k> | insert <k> <hex> | access <k>");
    sim->add_option("--report", sim_report, "write sweep reports as CSV");
    sim->add_option("--snapshot-out", sim_snapshot, "write final arena as FMA1");

    // bench
    auto* ben = app.add_subcommand("bench", "reproduce the compression-ratio evaluation");
    std::string ben_config, ben_csv = "bench.csv", ben_plot;
    ben->add_option("--config", ben_config, "JSON config path (defaults if omitted)");
    ben->add_option("--csv", ben_csv, "output CSV path")->capture_default_str();
    ben->add_option("--plot", ben_plot, "SVG path prefix (one chart per algorithm)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (gen->parsed())
            return cmd_generate(gen_count, gen_seed, gen_mode, gen_mac_pool, gen_meg_group,
                                gen_out, gen_format);
        if (cmp->parsed())
            return cmd_compress(cmp_in, cmp_out, cmp_word, cmp_interval);
        if (dec->parsed())
            return cmd_decompress(dec_in, dec_out, dec_format);
        if (sim->parsed())
            return cmd_simulate(sim_in, sim_capacity, sim_word, sim_interval, sim_script,
                                sim_report, sim_snapshot);
        if (ben->parsed())
            return cmd_bench(ben_config, ben_csv, ben_plot);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const CapacityError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitCapacity;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    }
    return kExitUsage;
}
