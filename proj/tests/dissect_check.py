#!/usr/bin/env python3
"""Reference dissector check.

Reads a classic pcap produced by `fmdelta generate --format pcap` and
dissects every frame independently of the C++ implementation: Ethernet
(with up to two VLAN tags), then either a CFM CCM PDU or IPv4/UDP/BFD.
Validates the standard constants and internal consistency, and prints a
frame-type summary. Exits nonzero on the first malformed frame.

Usage: dissect_check.py <file.pcap>
"""

import struct
import sys


def fail(msg):
    print(f"dissect_check: FAIL: {msg}")
    sys.exit(1)


def ipv4_checksum(header):
    total = 0
    for i in range(0, len(header), 2):
        total += (header[i] << 8) | header[i + 1]
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def dissect(frame, index):
    if len(frame) < 14:
        fail(f"frame {index}: shorter than an Ethernet header")
    offset = 12
    vlans = 0
    ethertype = struct.unpack_from(">H", frame, offset)[0]
    while ethertype in (0x8100, 0x88A8):
        vlans += 1
        if vlans > 2:
            fail(f"frame {index}: more than two VLAN tags")
        offset += 4
        ethertype = struct.unpack_from(">H", frame, offset)[0]
    payload = frame[offset + 2:]

    if ethertype == 0x8902:  # CFM
        if len(payload) != 75:
            fail(f"frame {index}: CCM PDU is {len(payload)} bytes, want 75")
        level_version, opcode, _flags, tlv_offset = struct.unpack_from("BBBB", payload)
        if level_version & 0x1F != 0:
            fail(f"frame {index}: CFM version is not 0")
        if opcode != 1:
            fail(f"frame {index}: CFM opcode {opcode} is not CCM")
        if tlv_offset != 70:
            fail(f"frame {index}: CCM first TLV offset {tlv_offset} != 70")
        mep_id = struct.unpack_from(">H", payload, 8)[0]
        if not 1 <= mep_id <= 8191:
            fail(f"frame {index}: MEP ID {mep_id} out of range")
        if payload[74] != 0:
            fail(f"frame {index}: missing CCM end TLV")
        if len(frame) != 89 + 4 * vlans:
            fail(f"frame {index}: CCM frame length {len(frame)} unexpected")
        return "ccm"

    if ethertype == 0x0800:  # IPv4
        if len(payload) < 20:
            fail(f"frame {index}: truncated IPv4 header")
        if payload[0] != 0x45:
            fail(f"frame {index}: not a 20-byte IPv4 header")
        total_length = struct.unpack_from(">H", payload, 2)[0]
        if total_length != len(payload):
            fail(f"frame {index}: IPv4 total length mismatch")
        if payload[9] != 17:
            fail(f"frame {index}: IPv4 protocol {payload[9]} is not UDP")
        if ipv4_checksum(payload[:20]) != 0:
            fail(f"frame {index}: IPv4 header checksum invalid")
        udp = payload[20:]
        sport, dport, ulen, _cksum = struct.unpack_from(">HHHH", udp)
        if dport != 3784:
            fail(f"frame {index}: UDP destination port {dport} is not BFD")
        if not 49152 <= sport <= 65535:
            fail(f"frame {index}: BFD source port {sport} outside RFC 5881 range")
        if ulen != len(udp):
            fail(f"frame {index}: UDP length mismatch")
        bfd = udp[8:]
        if len(bfd) != 24:
            fail(f"frame {index}: BFD PDU is {len(bfd)} bytes, want 24")
        if bfd[0] >> 5 != 1:
            fail(f"frame {index}: BFD version is not 1")
        if bfd[3] != 24:
            fail(f"frame {index}: BFD length field is not 24")
        my_disc = struct.unpack_from(">I", bfd, 4)[0]
        if my_disc == 0:
            fail(f"frame {index}: BFD my-discriminator must be nonzero")
        if len(frame) != 66 + 4 * vlans:
            fail(f"frame {index}: BFD frame length {len(frame)} unexpected")
        return "bfd"

    fail(f"frame {index}: unexpected EtherType {ethertype:#06x}")


def main():
    if len(sys.argv) != 2:
        fail("usage: dissect_check.py <file.pcap>")
    with open(sys.argv[1], "rb") as f:
        data = f.read()

    if len(data) < 24:
        fail("truncated pcap global header")
    magic = struct.unpack_from("<I", data)[0]
    if magic == 0xA1B2C3D4:
        endian = "<"
    elif struct.unpack_from(">I", data)[0] == 0xA1B2C3D4:
        endian = ">"
    else:
        fail("not a classic pcap file")
    link_type = struct.unpack_from(endian + "I", data, 20)[0]
    if link_type != 1:
        fail(f"link type {link_type} is not Ethernet")

    counts = {"ccm": 0, "bfd": 0}
    offset = 24
    index = 0
    while offset < len(data):
        ts_sec, ts_usec, incl, orig = struct.unpack_from(endian + "IIII", data, offset)
        offset += 16
        if ts_sec != 0 or ts_usec != 0:
            fail(f"frame {index}: nonzero timestamp")
        if incl != orig:
            fail(f"frame {index}: truncated capture record")
        counts[dissect(data[offset:offset + incl], index)] += 1
        offset += incl
        index += 1

    if counts["ccm"] != counts["bfd"]:
        fail(f"unbalanced dataset: {counts['ccm']} CCM vs {counts['bfd']} BFD")
    print(f"dissect_check: OK: {index} frames, {counts['ccm']} CCM, {counts['bfd']} BFD")


if __name__ == "__main__":
    main()
