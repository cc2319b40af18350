"""Denoisers and generalized projections behind one uniform interface.

Anything mapping the ambient space into a model set can drive the solvers:
exact orthogonal projections of the built-in models, the built-in Haar
hard-threshold denoiser, arbitrary callables, or an external denoiser
spoken to over a bit-exact binary subprocess protocol.

Wire protocol (one request per call, streamed over stdin/stdout):

    request  = b"GPDN" | version 0x01 | u32-le n | f64-le noise_level
               | n * f64-le samples
    response = u32-le n | n * f64-le samples

The subprocess owns no other state; a call either returns a same-length
finite vector or raises one of the distinct bridge errors (terminated,
timeout, malformed frame, non-finite payload).
"""

from __future__ import annotations

import os
import select
import shlex
import struct
import subprocess
import time
from dataclasses import dataclass

import numpy as np

from .linalg import haar_forward, haar_forward_rows, haar_inverse, haar_inverse_rows
from .models import ModelSet, hard_threshold, hard_threshold_rows

MAGIC = b"GPDN"
VERSION = 1
DEFAULT_TIMEOUT = 30.0

IDEMPOTENCE_REGIME = 0.02  # observed relative residual ceiling for usable denoisers


class BridgeError(RuntimeError):
    pass


class BridgeTerminated(BridgeError):
    pass


class BridgeTimeout(BridgeError):
    pass


class BridgeProtocolError(BridgeError):
    pass


class BridgeNonFinite(BridgeError):
    pass


class GeneralizedProjection:
    """Maps any ambient point into its (implicit) model set."""

    def apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def apply_batch(self, rows: np.ndarray) -> np.ndarray:
        return np.stack([self.apply(r) for r in rows])


class ModelProjection(GeneralizedProjection):
    """The orthogonal projection of a concrete model set."""

    def __init__(self, model: ModelSet):
        self.model = model

    def apply(self, x):
        return self.model.project_orth(np.asarray(x, dtype=float)).canonical

    def apply_batch(self, rows):
        return self.model.project_rows(np.asarray(rows, dtype=float))


class IdentityProjection(GeneralizedProjection):
    def apply(self, x):
        return np.array(x, dtype=float)

    def apply_batch(self, rows):
        return np.array(rows, dtype=float)


class CallableProjection(GeneralizedProjection):
    def __init__(self, fn):
        self.fn = fn

    def apply(self, x):
        return np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)


class HaarThresholdDenoiser(GeneralizedProjection):
    """Built-in denoiser: Haar analysis, keep the k largest coefficients, resynthesize.

    This is an exact orthogonal projection onto the Haar-sparse model (a
    finite union of coordinate subspaces in the transform domain), hence
    exactly idempotent.
    """

    def __init__(self, n: int, k: int):
        if n & (n - 1):
            raise ValueError("haar dimension: length must be a power of two")
        if not 1 <= k <= n:
            raise ValueError("need 1 <= k <= n")
        self.n = int(n)
        self.k = int(k)

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if x.size != self.n:
            raise ValueError("dimension mismatch")
        return haar_inverse(hard_threshold(haar_forward(x), self.k))

    def apply_batch(self, rows):
        rows = np.asarray(rows, dtype=float)
        return haar_inverse_rows(hard_threshold_rows(haar_forward_rows(rows), self.k))


def builtin_haar_ht(n: int, k: int) -> HaarThresholdDenoiser:
    return HaarThresholdDenoiser(n, k)


def request_frame(x: np.ndarray, noise_level: float) -> bytes:
    """Serialize one request; a pure function of its inputs (bit-exact)."""
    x = np.ascontiguousarray(np.asarray(x, dtype="<f8"))
    return (
        MAGIC
        + bytes([VERSION])
        + struct.pack("<I", x.size)
        + struct.pack("<d", float(noise_level))
        + x.tobytes()
    )


class ExternalDenoiser(GeneralizedProjection):
    """A denoiser living in a subprocess that speaks the wire protocol.

    One instance owns one subprocess; calls are serialized. The noise-level
    field rides along with every request for denoisers that want it.
    """

    def __init__(self, command, noise_level: float = 0.0, timeout: float = DEFAULT_TIMEOUT):
        if isinstance(command, str):
            command = shlex.split(command)
        self.command = list(command)
        self.noise_level = float(noise_level)
        self.timeout = float(timeout)
        self._proc: subprocess.Popen | None = None

    def _ensure_proc(self) -> subprocess.Popen:
        if self._proc is not None and self._proc.poll() is not None:
            self._proc = None
            raise BridgeTerminated("bridge terminated: subprocess exited")
        if self._proc is None:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
            )
        return self._proc

    def _read_exact(self, proc: subprocess.Popen, nbytes: int, deadline: float) -> bytes:
        fd = proc.stdout.fileno()
        buf = b""
        while len(buf) < nbytes:
            remaining = deadline - time.monotonic()
            if remaining <= 0.0:
                raise BridgeTimeout(f"bridge timeout after {self.timeout} s")
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                raise BridgeTimeout(f"bridge timeout after {self.timeout} s")
            chunk = os.read(fd, nbytes - len(buf))
            if chunk == b"":
                raise BridgeTerminated("bridge terminated: subprocess closed its output")
            buf += chunk
        return buf

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        proc = self._ensure_proc()
        deadline = time.monotonic() + self.timeout
        try:
            proc.stdin.write(request_frame(x, self.noise_level))
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise BridgeTerminated("bridge terminated: subprocess rejected input") from exc
        header = self._read_exact(proc, 4, deadline)
        (count,) = struct.unpack("<I", header)
        if count != x.size:
            raise BridgeProtocolError(
                f"malformed frame: expected {x.size} samples, header says {count}"
            )
        payload = self._read_exact(proc, 8 * count, deadline)
        out = np.frombuffer(payload, dtype="<f8").astype(np.float64)
        if not np.all(np.isfinite(out)):
            raise BridgeNonFinite("bridge returned non-finite samples")
        return out

    def close(self):
        if self._proc is not None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
            self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *_):
        self.close()


def external(command, noise_level: float = 0.0, timeout: float = DEFAULT_TIMEOUT) -> ExternalDenoiser:
    return ExternalDenoiser(command, noise_level=noise_level, timeout=timeout)


@dataclass
class FixedPointProbe:
    """Idempotence residual |D(D(x)) - D(x)| / |D(x)| of a denoiser at x."""

    input: np.ndarray
    residual: float | None
    outside_observed_regime: bool = False


def probe_fixed_point(proj: GeneralizedProjection, x) -> FixedPointProbe:
    x = np.asarray(x, dtype=float)
    d1 = proj.apply(x)
    scale = float(np.linalg.norm(d1))
    if scale < 1e-14:
        return FixedPointProbe(x, None)
    residual = float(np.linalg.norm(proj.apply(d1) - d1)) / scale
    return FixedPointProbe(x, residual, residual > IDEMPOTENCE_REGIME)
