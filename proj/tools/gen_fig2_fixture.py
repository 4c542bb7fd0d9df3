#!/usr/bin/env python3
"""Writes the frozen delegated-extended fixture used for the block-size histogram.

The file is synthetic: rows are invented, but the ipv6 allocated/assigned
histogram matches the May 2018 counts (/32: 17795, /48: 6283, /29: 7903,
191 blocks larger than /29). Output is deterministic.
"""
import argparse
import ipaddress
import random

TARGET = {32: 17795, 48: 6283, 29: 7903}
LARGER = {19: 2, 20: 9, 22: 6, 23: 12, 24: 18, 25: 10, 26: 28, 27: 42, 28: 64}
OTHER = {30: 310, 31: 214, 33: 402, 34: 255, 35: 388, 36: 310, 40: 1204,
         44: 987, 46: 312, 47: 233, 56: 98, 64: 12}
REGISTRIES = {
    "afrinic": ["ZA", "KE", "NG", "EG", "MU"],
    "apnic": ["JP", "CN", "AU", "IN", "KR"],
    "arin": ["US", "CA"],
    "lacnic": ["BR", "AR", "MX", "CL"],
    "ripencc": ["DE", "NL", "GB", "FR", "RU"],
}


def region_base(length):
    # Blocks larger than /29 share 2a00::/8; every other length gets its own /16.
    return (0x2A00 << 112) if length < 29 else ((0x2400 + length) << 112)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out")
    ap.add_argument("--seed", type=int, default=2018)
    args = ap.parse_args()
    rng = random.Random(args.seed)

    counts = {**TARGET, **LARGER, **OTHER}
    rows = []
    larger_next = 0
    for length in sorted(counts):
        for i in range(counts[length]):
            size = 1 << (128 - length)
            if length < 29:
                larger_next = (larger_next + size - 1) // size * size
                addr = region_base(length) + larger_next
                larger_next += size
            else:
                addr = region_base(length) + i * size
            reg = rng.choice(sorted(REGISTRIES))
            cc = rng.choice(REGISTRIES[reg])
            date = "%04d%02d%02d" % (rng.randint(1999, 2018), rng.randint(1, 12), rng.randint(1, 28))
            status = "allocated" if length <= 32 or rng.random() < 0.4 else "assigned"
            opaque = "%08x-%04x" % (rng.getrandbits(32), rng.getrandbits(16))
            rows.append(f"{reg}|{cc}|ipv6|{ipaddress.IPv6Address(addr)}|{length}|{date}|{status}|{opaque}")

    # Rows the histogram must ignore.
    for i in range(400):
        reg = rng.choice(sorted(REGISTRIES))
        rows.append(f"{reg}|{rng.choice(REGISTRIES[reg])}|ipv4|10.{i // 256}.{i % 256}.0|256|20100101|allocated|x{i}")
        rows.append(f"{reg}|{rng.choice(REGISTRIES[reg])}|asn|{64512 + i}|1|20100101|assigned|y{i}")
    for i in range(50):
        rows.append(f"ripencc||ipv6|{ipaddress.IPv6Address((0x2c0f << 112) + (i << 96))}|32||available|")
        rows.append(f"apnic||ipv6|{ipaddress.IPv6Address((0x2c0e << 112) + (i << 96))}|32||reserved|")
    rng.shuffle(rows)

    n6 = sum(1 for r in rows if "|ipv6|" in r)
    n4 = sum(1 for r in rows if "|ipv4|" in r)
    na = sum(1 for r in rows if "|asn|" in r)
    with open(args.out, "w", newline="\n") as f:
        f.write("# Synthetic delegated-extended snapshot, histogram-equivalent to May 2018.\n")
        f.write("# Generated by tools/gen_fig2_fixture.py; do not edit by hand.\n")
        f.write(f"2.3|nro|20180515|{len(rows)}|19700101|20180515|+0000\n")
        f.write(f"nro|*|asn|*|{na}|summary\n")
        f.write(f"nro|*|ipv4|*|{n4}|summary\n")
        f.write(f"nro|*|ipv6|*|{n6}|summary\n")
        for r in rows:
            f.write(r + "\n")


if __name__ == "__main__":
    main()
