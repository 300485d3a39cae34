#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fmdelta/codec.hpp"

namespace fmdelta {

enum class FileFormat { fmp1, pcap, fmd1, fma1, unknown };

/// Inspects leading magic bytes.
FileFormat detect_format(std::span<const std::uint8_t> data);

/// Length-prefixed dataset: magic "FMP1", u32be count, then per packet a
/// u16be length followed by the packet bytes.
std::vector<std::uint8_t> build_fmp1(std::span<const RawPacket> packets);
std::vector<RawPacket> parse_fmp1(std::span<const std::uint8_t> data);

/// The per-packet section of the FMP1 format, without magic and count.
/// This is the input handed to the baseline compressor.
std::vector<std::uint8_t> build_fmp1_body(std::span<const RawPacket> packets);

/// Classic little-endian pcap, link type Ethernet, all timestamps zero.
std::vector<std::uint8_t> build_pcap(std::span<const RawPacket> packets);
std::vector<RawPacket> parse_pcap(std::span<const std::uint8_t> data);

/// Parses a dataset in either FMP1 or pcap format.
std::vector<RawPacket> parse_dataset(std::span<const std::uint8_t> data);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> data);

} // namespace fmdelta
