#!/usr/bin/env python3
"""Reference wire-protocol plugin: Haar hard-threshold denoiser.

A deliberately independent, stdlib-only implementation of the orthonormal
Haar transform and top-k magnitude selection (lowest index wins ties), for
cross-checking the built-in denoiser through the subprocess bridge.

Usage: haar_ht_denoiser.py --k K
"""

import argparse
import math
import struct
import sys


def haar_forward(x):
    n = len(x)
    out = [0.0] * n
    approx = list(x)
    inv = 1.0 / math.sqrt(2.0)
    h = n
    while h > 1:
        h //= 2
        for i in range(h):
            a, b = approx[2 * i], approx[2 * i + 1]
            out[h + i] = (a - b) * inv
            approx[i] = (a + b) * inv
    out[0] = approx[0]
    return out


def haar_inverse(c):
    n = len(c)
    out = list(c)
    inv = 1.0 / math.sqrt(2.0)
    h = 1
    while h < n:
        nxt = [0.0] * (2 * h)
        for i in range(h):
            a, d = out[i], out[h + i]
            nxt[2 * i] = (a + d) * inv
            nxt[2 * i + 1] = (a - d) * inv
        out[: 2 * h] = nxt
        h *= 2
    return out


def hard_threshold(c, k):
    if k >= len(c):
        return list(c)
    order = sorted(range(len(c)), key=lambda i: (-abs(c[i]), i))
    out = [0.0] * len(c)
    for i in order[:k]:
        out[i] = c[i]
    return out


def read_exact(stream, n):
    buf = b""
    while len(buf) < n:
        chunk = stream.read(n - len(buf))
        if not chunk:
            return None
        buf += chunk
    return buf


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--k", type=int, required=True)
    args = parser.parse_args()
    stdin = sys.stdin.buffer
    stdout = sys.stdout.buffer
    while True:
        header = read_exact(stdin, 4 + 1 + 4 + 8)
        if header is None:
            return 0
        if header[:4] != b"GPDN" or header[4] != 1:
            return 1
        (count,) = struct.unpack("<I", header[5:9])
        payload = read_exact(stdin, 8 * count)
        if payload is None:
            return 1
        x = list(struct.unpack("<%dd" % count, payload))
        if count & (count - 1):
            return 1  # power-of-two lengths only
        y = haar_inverse(hard_threshold(haar_forward(x), args.k))
        stdout.write(struct.pack("<I", count))
        stdout.write(struct.pack("<%dd" % count, *y))
        stdout.flush()


if __name__ == "__main__":
    sys.exit(main())
