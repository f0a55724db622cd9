#!/usr/bin/env python3
"""Builds golden COMPRESSED_TCP / FULL_HEADER byte sequences independently of
the C++ codec. Run from this directory: python3 make_golden.py > golden_records.json"""
import json
import struct

SERVER_ADDR = 0x0C810001
SERVER_PORT = 3724


def endpoints(flow, c2s):
    client = 0x0A000001 + flow
    cport = 49152 + flow % 16384
    return (client, SERVER_ADDR, cport, SERVER_PORT) if c2s else (SERVER_ADDR, client, SERVER_PORT, cport)


def ones_sum(words):
    s = sum(words)
    while s >> 16:
        s = (s & 0xFFFF) + (s >> 16)
    return s


def tcp_checksum(p):
    src, dst, sp, dp = endpoints(p["flow"], p["c2s"])
    flags = 0x10 | (0x08 if p["push"] else 0)
    seg = struct.pack(">HHIIBBHHH", sp, dp, p["seq"], p["ack"], 0x50, flags, p["window"], 0, 0)
    pseudo = struct.pack(">IIBBH", src, dst, 0, 6, 20 + p["payload"])
    data = pseudo + seg
    words = [int.from_bytes(data[i:i + 2], "big") for i in range(0, len(data), 2)]
    return (~ones_sum(words)) & 0xFFFF


def full_header(p, cid):
    src, dst, sp, dp = endpoints(p["flow"], p["c2s"])
    ip = bytearray(struct.pack(">BBBBHHBBHII", 0x45, 0, 0, cid, p["ipid"], 0x4000, 64, 6, 0, src, dst))
    words = [int.from_bytes(ip[i:i + 2], "big") for i in range(0, 20, 2)]
    ip[10:12] = struct.pack(">H", (~ones_sum(words)) & 0xFFFF)
    flags = 0x10 | (0x08 if p["push"] else 0)
    tcp = struct.pack(">HHIIBBHHH", sp, dp, p["seq"], p["ack"], 0x50, flags, p["window"], tcp_checksum(p), 0)
    return bytes(ip) + tcp


def compressed(p, prev, cid):
    mask = 0x02 if p["push"] else 0
    fields = bytearray()
    dw = (p["window"] - prev["window"]) & 0xFFFF
    if dw >= 0x8000:
        dw -= 0x10000
    if dw:
        mask |= 0x10
        fields += struct.pack(">b", dw) if -128 <= dw <= 127 else b"\x00" + struct.pack(">H", p["window"])
    for key, bit in (("ack", 0x08), ("seq", 0x04)):
        d = (p[key] - prev[key]) & 0xFFFFFFFF
        if d:
            mask |= bit
            fields += bytes([d]) if d <= 255 else b"\x00" + struct.pack(">I", p[key])
    di = (p["ipid"] - prev["ipid"]) & 0xFFFF
    if di:
        mask |= 0x01
        fields += bytes([di]) if di <= 255 else b"\x00" + struct.pack(">H", p["ipid"])
    return bytes([cid, mask]) + struct.pack(">H", tcp_checksum(p)) + bytes(fields)


def pkt(flow, c2s, payload, push, seq, ack, window, ipid):
    return dict(flow=flow, c2s=c2s, payload=payload, push=push, seq=seq, ack=ack, window=window, ipid=ipid)


flows = [
    ("c2s_basic", [
        pkt(0, True, 12, True, 1000, 2000, 8192, 7),           # full header
        pkt(0, True, 0, False, 1012, 2000, 8192, 8),           # dseq=12, dipid=1, no push
        pkt(0, True, 20, True, 1012, 2000, 8192, 9),           # only ipid + push
        pkt(0, True, 0, False, 1032, 72000, 8192, 10),         # dack=70000 -> escape
        pkt(0, True, 6, True, 1032, 72000, 8142, 11),          # dwin=-50
        pkt(0, True, 6, True, 1038, 72001, 1000, 12),          # window full change
        pkt(0, True, 6, False, 1044, 72001, 1000, 312),        # ipid +300 -> escape
        pkt(0, True, 0, False, 1050, 72001, 1000, 312),        # ipid unchanged
    ]),
    ("s2c_wrap", [
        pkt(41, False, 1460, False, 0xFFFFFFF0, 0xFFFFFF00, 65535, 0xFFFF),
        pkt(41, False, 80, True, 0xFFFFFFF0 + 1460 - 2**32, 0xFFFFFF00, 65535, 0x0000),  # seq full
        pkt(41, False, 0, False, (0xFFFFFFF0 + 1540) % 2**32, 0x00000010, 0x0005, 0x0001),  # ack/win wrap
    ]),
]

out = []
for name, packets in flows:
    cid = 5 if name == "s2c_wrap" else 0
    records = []
    prev = None
    for p in packets:
        hdr = full_header(p, cid) if prev is None else compressed(p, prev, cid)
        records.append({"packet": p, "kind": "full" if prev is None else "compressed", "hex": hdr.hex()})
        prev = p
    out.append({"name": name, "cid": cid, "records": records})
print(json.dumps(out, indent=1))
