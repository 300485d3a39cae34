#include "fmdelta/pktgen.hpp"

#include <algorithm>
#include <numeric>

#include "fmdelta/bytes.hpp"
#include "fmdelta/rng.hpp"

namespace fmdelta {

namespace {

constexpr std::uint16_t kEtherTypeCfm = 0x8902;
constexpr std::uint16_t kEtherTypeIpv4 = 0x0800;
constexpr std::uint16_t kTpidCtag = 0x8100;
constexpr std::uint16_t kTpidStag = 0x88A8;
constexpr std::uint16_t kBfdUdpPort = 3784;

constexpr std::size_t kCfmPduSize = 75;   // common header + CCM fields + end TLV
constexpr std::size_t kBfdPduSize = 24;
constexpr std::size_t kIpv4HeaderSize = 20;
constexpr std::size_t kUdpHeaderSize = 8;

std::uint16_t ipv4_checksum(const std::uint8_t* header, std::size_t len) {
    std::uint32_t sum = 0;
    for (std::size_t i = 0; i + 1 < len; i += 2)
        sum += read_u16be(header + i);
    while (sum >> 16)
        sum = (sum & 0xFFFF) + (sum >> 16);
    return static_cast<std::uint16_t>(~sum & 0xFFFF);
}

void put_ethernet(std::vector<std::uint8_t>& out, const MacAddr& dst,
                  const MacAddr& src, const std::vector<VlanTag>& tags,
                  std::uint16_t ethertype) {
    out.insert(out.end(), dst.begin(), dst.end());
    out.insert(out.end(), src.begin(), src.end());
    for (const VlanTag& tag : tags) {
        put_u16be(out, tag.tpid);
        put_u16be(out, tag.tci);
    }
    put_u16be(out, ethertype);
}

} // namespace

void validate_spec(const DatasetSpec& spec) {
    if (spec.total_packets < 2 || spec.total_packets % 2 != 0)
        throw UsageError("total packet count must be even and >= 2");
    if (spec.mac_pool_size < 1)
        throw UsageError("MAC pool must hold at least one address");
    if (spec.meg_group_size < 1)
        throw UsageError("MEG group size must be >= 1");
    if (spec.vlan_choices.empty())
        throw UsageError("at least one VLAN tag count is required");
    for (unsigned n : spec.vlan_choices)
        if (n > 2)
            throw UsageError("VLAN tag counts above 2 are not supported");
}

std::vector<std::uint8_t> serialize(const CcmFrame& frame) {
    std::vector<std::uint8_t> out;
    out.reserve(89 + 4 * frame.vlan_tags.size());
    put_ethernet(out, frame.dst_mac, frame.src_mac, frame.vlan_tags, kEtherTypeCfm);
    out.push_back(frame.md_level_version);
    out.push_back(frame.opcode);
    out.push_back(frame.flags);
    out.push_back(frame.first_tlv_offset);
    put_u32be(out, frame.sequence_number);
    put_u16be(out, frame.mep_id);
    out.insert(out.end(), frame.meg_id.begin(), frame.meg_id.end());
    put_u32be(out, frame.tx_fcf);
    put_u32be(out, frame.rx_fcb);
    put_u32be(out, frame.tx_fcb);
    put_u32be(out, frame.reserved);
    out.push_back(frame.end_tlv);
    return out;
}

std::vector<std::uint8_t> serialize(const BfdFrame& frame) {
    std::vector<std::uint8_t> out;
    out.reserve(66 + 4 * frame.vlan_tags.size());
    put_ethernet(out, frame.dst_mac, frame.src_mac, frame.vlan_tags, kEtherTypeIpv4);

    const std::size_t ip_off = out.size();
    out.push_back(0x45);  // version 4, IHL 5
    out.push_back(frame.dscp_ecn);
    put_u16be(out, static_cast<std::uint16_t>(kIpv4HeaderSize + kUdpHeaderSize + kBfdPduSize));
    put_u16be(out, frame.ip_id);
    put_u16be(out, frame.ip_flags_frag);
    out.push_back(frame.ttl);
    out.push_back(17);  // UDP
    put_u16be(out, 0);  // checksum placeholder
    put_u32be(out, frame.src_ip);
    put_u32be(out, frame.dst_ip);
    store_u16be(out.data() + ip_off + 10, ipv4_checksum(out.data() + ip_off, kIpv4HeaderSize));

    put_u16be(out, frame.src_port);
    put_u16be(out, kBfdUdpPort);
    put_u16be(out, static_cast<std::uint16_t>(kUdpHeaderSize + kBfdPduSize));
    put_u16be(out, 0);  // UDP checksum not used over IPv4

    out.push_back(frame.vers_diag);
    out.push_back(frame.state_flags);
    out.push_back(frame.detect_mult);
    out.push_back(static_cast<std::uint8_t>(kBfdPduSize));
    put_u32be(out, frame.my_disc);
    put_u32be(out, frame.your_disc);
    put_u32be(out, frame.min_tx_interval);
    put_u32be(out, frame.min_rx_interval);
    put_u32be(out, frame.min_echo_rx_interval);
    return out;
}

namespace {

struct EthernetView {
    MacAddr dst;
    MacAddr src;
    std::vector<VlanTag> tags;
    std::uint16_t ethertype;
    std::size_t payload_offset;
};

EthernetView parse_ethernet(const std::vector<std::uint8_t>& b) {
    if (b.size() < 14)
        throw FrameParseError("ethernet", "frame shorter than 14 bytes");
    EthernetView eth;
    std::copy_n(b.begin(), 6, eth.dst.begin());
    std::copy_n(b.begin() + 6, 6, eth.src.begin());
    std::size_t off = 12;
    std::uint16_t type = read_u16be(b.data() + off);
    while (type == kTpidCtag || type == kTpidStag) {
        if (eth.tags.size() == 2)
            throw FrameParseError("ethernet", "more than 2 VLAN tags");
        if (off + 6 > b.size())
            throw FrameParseError("ethernet", "truncated VLAN tag");
        eth.tags.push_back({type, read_u16be(b.data() + off + 2)});
        off += 4;
        type = read_u16be(b.data() + off);
    }
    eth.ethertype = type;
    eth.payload_offset = off + 2;
    return eth;
}

CcmFrame parse_ccm(const std::vector<std::uint8_t>& b, const EthernetView& eth) {
    if (b.size() - eth.payload_offset != kCfmPduSize)
        throw FrameParseError("cfm", "CCM PDU must be exactly " +
                                         std::to_string(kCfmPduSize) + " bytes");
    const std::uint8_t* p = b.data() + eth.payload_offset;
    CcmFrame f;
    f.dst_mac = eth.dst;
    f.src_mac = eth.src;
    f.vlan_tags = eth.tags;
    f.md_level_version = p[0];
    f.opcode = p[1];
    if (f.opcode != 1)
        throw FrameParseError("cfm", "opcode is not CCM");
    f.flags = p[2];
    f.first_tlv_offset = p[3];
    if (f.first_tlv_offset != 70)
        throw FrameParseError("cfm", "unexpected first TLV offset");
    f.sequence_number = read_u32be(p + 4);
    f.mep_id = read_u16be(p + 8);
    std::copy_n(p + 10, 48, f.meg_id.begin());
    f.tx_fcf = read_u32be(p + 58);
    f.rx_fcb = read_u32be(p + 62);
    f.tx_fcb = read_u32be(p + 66);
    f.reserved = read_u32be(p + 70);
    f.end_tlv = p[74];
    if (f.end_tlv != 0)
        throw FrameParseError("cfm", "missing end TLV");
    return f;
}

BfdFrame parse_bfd(const std::vector<std::uint8_t>& b, const EthernetView& eth) {
    const std::size_t remaining = b.size() - eth.payload_offset;
    if (remaining != kIpv4HeaderSize + kUdpHeaderSize + kBfdPduSize)
        throw FrameParseError("ipv4", "unexpected IPv4 payload size");
    const std::uint8_t* ip = b.data() + eth.payload_offset;
    if (ip[0] != 0x45)
        throw FrameParseError("ipv4", "expected version 4 with 20-byte header");
    if (read_u16be(ip + 2) != remaining)
        throw FrameParseError("ipv4", "total length does not match frame");
    if (ip[9] != 17)
        throw FrameParseError("ipv4", "protocol is not UDP");
    if (ipv4_checksum(ip, kIpv4HeaderSize) != 0x0000)
        throw FrameParseError("ipv4", "header checksum mismatch");

    const std::uint8_t* udp = ip + kIpv4HeaderSize;
    if (read_u16be(udp + 2) != kBfdUdpPort)
        throw FrameParseError("udp", "destination port is not 3784");
    if (read_u16be(udp + 4) != kUdpHeaderSize + kBfdPduSize)
        throw FrameParseError("udp", "length does not match payload");
    if (read_u16be(udp + 6) != 0)
        throw FrameParseError("udp", "nonzero UDP checksum unsupported");

    const std::uint8_t* bfd = udp + kUdpHeaderSize;
    if ((bfd[0] >> 5) != 1)
        throw FrameParseError("bfd", "version is not 1");
    if (bfd[3] != kBfdPduSize)
        throw FrameParseError("bfd", "length field is not 24");

    BfdFrame f;
    f.dst_mac = eth.dst;
    f.src_mac = eth.src;
    f.vlan_tags = eth.tags;
    f.dscp_ecn = ip[1];
    f.ip_id = read_u16be(ip + 4);
    f.ip_flags_frag = read_u16be(ip + 6);
    f.ttl = ip[8];
    f.src_ip = read_u32be(ip + 12);
    f.dst_ip = read_u32be(ip + 16);
    f.src_port = read_u16be(udp);
    f.vers_diag = bfd[0];
    f.state_flags = bfd[1];
    f.detect_mult = bfd[2];
    f.my_disc = read_u32be(bfd + 4);
    f.your_disc = read_u32be(bfd + 8);
    f.min_tx_interval = read_u32be(bfd + 12);
    f.min_rx_interval = read_u32be(bfd + 16);
    f.min_echo_rx_interval = read_u32be(bfd + 20);
    return f;
}

} // namespace

ParsedFrame parse_frame(const RawPacket& packet) {
    EthernetView eth = parse_ethernet(packet.bytes);
    if (packet.bytes.size() < eth.payload_offset)
        throw FrameParseError("ethernet", "missing payload");
    switch (eth.ethertype) {
    case kEtherTypeCfm:
        return parse_ccm(packet.bytes, eth);
    case kEtherTypeIpv4:
        return parse_bfd(packet.bytes, eth);
    default:
        throw FrameParseError("ethernet", "unknown EtherType");
    }
}

FrameType frame_type(const ParsedFrame& frame) {
    return std::holds_alternative<CcmFrame>(frame) ? FrameType::ccm : FrameType::bfd;
}

namespace {

MacAddr random_mac(Rng& rng) {
    MacAddr mac;
    rng.fill(mac.data(), mac.size());
    return mac;
}

std::vector<VlanTag> random_tags(Rng& rng, const DatasetSpec& spec) {
    unsigned n = spec.vlan_choices[rng.below(spec.vlan_choices.size())];
    std::vector<VlanTag> tags(n);
    for (VlanTag& tag : tags)
        tag.tci = rng.next_u16();
    return tags;
}

/// MEG ID in the character-string format: no MD name, a 5-character
/// short MA name, zero padding to 48 bytes.
std::array<std::uint8_t, 48> random_meg_id(Rng& rng) {
    static const char alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    std::array<std::uint8_t, 48> id{};
    id[0] = 1;  // MD name format: none
    id[1] = 2;  // short MA name format: character string
    id[2] = 5;  // short MA name length
    for (std::size_t i = 0; i < 5; ++i)
        id[3 + i] = static_cast<std::uint8_t>(alphabet[rng.below(36)]);
    return id;
}

} // namespace

std::vector<RawPacket> generate(const DatasetSpec& spec) {
    validate_spec(spec);
    Rng rng(spec.seed);

    std::vector<MacAddr> pool(spec.mac_pool_size);
    for (MacAddr& mac : pool)
        mac = random_mac(rng);

    const std::size_t per_type = spec.total_packets / 2;
    std::vector<RawPacket> packets;
    packets.reserve(spec.total_packets);

    std::array<std::uint8_t, 48> meg_id{};
    for (std::size_t i = 0; i < per_type; ++i) {
        if (i % spec.meg_group_size == 0)
            meg_id = random_meg_id(rng);
        CcmFrame f;
        f.dst_mac = random_mac(rng);
        f.src_mac = pool[rng.below(pool.size())];
        f.vlan_tags = random_tags(rng, spec);
        f.md_level_version = 0x80;  // MD level 4, version 0
        f.flags = 0x04;             // period code: 1 frame per second
        f.sequence_number = static_cast<std::uint32_t>(rng.below(65536));
        f.mep_id = 1;
        f.meg_id = meg_id;
        f.tx_fcf = static_cast<std::uint32_t>(rng.below(65536));
        packets.push_back(RawPacket{serialize(f)});
    }

    for (std::size_t i = 0; i < per_type; ++i) {
        BfdFrame f;
        f.dst_mac = random_mac(rng);
        f.src_mac = pool[rng.below(pool.size())];
        f.vlan_tags = random_tags(rng, spec);
        f.ip_id = rng.next_u16();
        f.src_ip = rng.next_u32();
        f.dst_ip = rng.next_u32();
        // Discriminators are session identifiers; a device at this scale
        // allocates them from a 16-bit space.
        f.my_disc = 1 + static_cast<std::uint32_t>(rng.below(65535));
        f.your_disc = 1 + static_cast<std::uint32_t>(rng.below(65535));
        f.min_tx_interval = 1000000;  // microseconds
        f.min_rx_interval = 1000000;
        packets.push_back(RawPacket{serialize(f)});
    }

    if (spec.mode == ArrangeMode::random) {
        for (std::size_t i = packets.size() - 1; i > 0; --i)
            std::swap(packets[i], packets[rng.below(i + 1)]);
        return packets;
    }
    return arrange_ordered(packets);
}

std::vector<RawPacket> arrange_ordered(std::span<const RawPacket> packets) {
    struct SortKey {
        int type;
        std::size_t length;
        std::array<std::uint8_t, 48> meg_id;  // zero for BFD
    };

    std::vector<SortKey> keys;
    keys.reserve(packets.size());
    for (std::size_t i = 0; i < packets.size(); ++i) {
        try {
            ParsedFrame frame = parse_frame(packets[i]);
            SortKey key{};
            key.length = packets[i].length();
            if (const CcmFrame* ccm = std::get_if<CcmFrame>(&frame)) {
                key.type = 0;
                key.meg_id = ccm->meg_id;
            } else {
                key.type = 1;
            }
            keys.push_back(key);
        } catch (const FrameParseError& e) {
            throw FrameParseError("packet " + std::to_string(i), e.what());
        }
    }

    std::vector<std::size_t> order(packets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const SortKey& ka = keys[a];
        const SortKey& kb = keys[b];
        if (ka.type != kb.type) return ka.type < kb.type;
        if (ka.length != kb.length) return ka.length < kb.length;
        return ka.meg_id < kb.meg_id;
    });

    std::vector<RawPacket> out;
    out.reserve(packets.size());
    for (std::size_t idx : order)
        out.push_back(packets[idx]);
    return out;
}

} // namespace fmdelta
