"""Raw-float image container and file formats used by the command line.

Native format GPIM: magic b"GPIM", u32-le height, u32-le width, then
height * width f64-le pixels in row-major order. PGM (P2/P5, maxval <= 65535)
is accepted for import, scaled to [0, 1].
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"GPIM"


def write_gpim(path, pixels: np.ndarray):
    pixels = np.asarray(pixels, dtype="<f8")
    if pixels.ndim == 1:
        pixels = pixels[None, :]
    if pixels.ndim != 2:
        raise ValueError("pixels must be 1-d or 2-d")
    h, w = pixels.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", h, w))
        fh.write(np.ascontiguousarray(pixels).tobytes())


def read_gpim(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ValueError("not a GPIM file")
    h, w = struct.unpack("<II", data[4:12])
    pixels = np.frombuffer(data[12 : 12 + 8 * h * w], dtype="<f8")
    if pixels.size != h * w:
        raise ValueError("truncated GPIM payload")
    return pixels.reshape(h, w).astype(np.float64)


def read_pgm(path) -> np.ndarray:
    """P2/P5 PGM import, values scaled to [0, 1]."""
    raw = Path(path).read_bytes()
    fields: list[bytes] = []
    i = 0
    while len(fields) < 4:
        while i < len(raw) and raw[i : i + 1].isspace():
            i += 1
        if raw[i : i + 1] == b"#":
            while i < len(raw) and raw[i] != 0x0A:
                i += 1
            continue
        j = i
        while j < len(raw) and not raw[j : j + 1].isspace():
            j += 1
        fields.append(raw[i:j])
        i = j
    magic, w, h, maxval = fields[0], int(fields[1]), int(fields[2]), int(fields[3])
    if magic == b"P5":
        i += 1  # single whitespace after maxval
        dtype = np.uint8 if maxval < 256 else ">u2"
        pixels = np.frombuffer(raw[i:], dtype=dtype, count=h * w).reshape(h, w)
    elif magic == b"P2":
        pixels = np.array(raw[i:].split()[: h * w], dtype=np.float64).reshape(h, w)
    else:
        raise ValueError("unsupported PGM flavor")
    return pixels.astype(np.float64) / float(maxval)


def load_image(path) -> np.ndarray:
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        return read_pgm(path)
    return read_gpim(path)


def psnr(x: np.ndarray, reference: np.ndarray, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB against the peak-1.0 convention."""
    mse = float(np.mean((np.asarray(x, float) - np.asarray(reference, float)) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(peak * peak / mse)
