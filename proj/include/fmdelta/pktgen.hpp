#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "fmdelta/codec.hpp"

namespace fmdelta {

using MacAddr = std::array<std::uint8_t, 6>;

struct VlanTag {
    std::uint16_t tpid = 0x8100;
    std::uint16_t tci = 0;  // PCP + DEI + 12-bit VLAN ID

    bool operator==(const VlanTag&) const = default;
};

enum class FrameType { ccm, bfd };

enum class ArrangeMode { ordered, random };

/// Parameters of one synthetic keepalive dataset. Identical specs
/// (including the seed) produce byte-identical datasets.
struct DatasetSpec {
    std::size_t total_packets = 0;  // even, half CCM and half BFD
    std::uint64_t seed = 0;
    ArrangeMode mode = ArrangeMode::random;
    std::size_t mac_pool_size = 32;    // source addresses of the simulated device
    std::size_t meg_group_size = 3;    // consecutive CCMs sharing one MEG ID
    std::vector<unsigned> vlan_choices = {0, 1, 2};
};

void validate_spec(const DatasetSpec& spec);

/// Continuity Check Message over Ethernet (802.1ag / Y.1731 layout).
/// Serialized size is 89 bytes plus 4 per VLAN tag.
struct CcmFrame {
    MacAddr dst_mac{};
    MacAddr src_mac{};
    std::vector<VlanTag> vlan_tags;
    std::uint8_t md_level_version = 0;  // MD level in bits 7..5, version in 4..0
    std::uint8_t opcode = 1;            // CCM
    std::uint8_t flags = 0;             // RDI bit + period code
    std::uint8_t first_tlv_offset = 70;
    std::uint32_t sequence_number = 0;
    std::uint16_t mep_id = 0;
    std::array<std::uint8_t, 48> meg_id{};
    std::uint32_t tx_fcf = 0;
    std::uint32_t rx_fcb = 0;
    std::uint32_t tx_fcb = 0;
    std::uint32_t reserved = 0;
    std::uint8_t end_tlv = 0;

    bool operator==(const CcmFrame&) const = default;
};

/// BFD control packet over UDP/IPv4/Ethernet (RFC 5880 layout).
/// Serialized size is 66 bytes plus 4 per VLAN tag.
struct BfdFrame {
    MacAddr dst_mac{};
    MacAddr src_mac{};
    std::vector<VlanTag> vlan_tags;
    std::uint8_t dscp_ecn = 0;
    std::uint16_t ip_id = 0;
    std::uint16_t ip_flags_frag = 0;
    std::uint8_t ttl = 255;
    std::uint32_t src_ip = 0;
    std::uint32_t dst_ip = 0;
    std::uint16_t src_port = 49152;  // UDP destination port is always 3784
    std::uint8_t vers_diag = 0x20;   // version 1, diagnostic code 0
    std::uint8_t state_flags = 0xC0; // state Up, no flags
    std::uint8_t detect_mult = 3;
    std::uint32_t my_disc = 0;
    std::uint32_t your_disc = 0;
    std::uint32_t min_tx_interval = 0;
    std::uint32_t min_rx_interval = 0;
    std::uint32_t min_echo_rx_interval = 0;

    bool operator==(const BfdFrame&) const = default;
};

using ParsedFrame = std::variant<CcmFrame, BfdFrame>;

std::vector<std::uint8_t> serialize(const CcmFrame& frame);
std::vector<std::uint8_t> serialize(const BfdFrame& frame);

/// Structural parse with validation (EtherTypes, IPv4 header checksum,
/// UDP port 3784, PDU sizes). Throws FrameParseError naming the layer.
ParsedFrame parse_frame(const RawPacket& packet);

FrameType frame_type(const ParsedFrame& frame);

/// Synthesizes a full dataset per the spec: half CCM, half BFD, source
/// MACs from a fixed pool, destination MACs and BFD IP addresses fully
/// random, 0-2 VLAN tags with random TCIs per packet, and one fresh MEG ID
/// per group of meg_group_size consecutive CCMs. The result is shuffled
/// (random mode) or size/MEG-sorted (ordered mode).
std::vector<RawPacket> generate(const DatasetSpec& spec);

/// Stable-sorts packets by (frame type, total length) and, for CCMs, by
/// MEG ID, so every (MEG ID, length) family forms one contiguous run.
/// Throws FrameParseError with the offending index for unparseable input.
std::vector<RawPacket> arrange_ordered(std::span<const RawPacket> packets);

} // namespace fmdelta
