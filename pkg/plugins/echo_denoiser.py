#!/usr/bin/env python3
"""Reference wire-protocol plugin: the identity denoiser.

Reads request frames (magic GPDN, version byte, u32-le count, f64-le noise
level, count f64-le samples) from stdin and answers each with an unchanged
copy of the payload. Useful for bitwise round-trip checks of the bridge.
"""

import struct
import sys


def read_exact(stream, n):
    buf = b""
    while len(buf) < n:
        chunk = stream.read(n - len(buf))
        if not chunk:
            return None
        buf += chunk
    return buf


def main():
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
        stdout.write(struct.pack("<I", count))
        stdout.write(payload)
        stdout.flush()


if __name__ == "__main__":
    sys.exit(main())
