"""Dense real linear algebra and the orthonormal Haar transform.

Everything operates on plain float64 ``numpy`` arrays: vectors are 1-d,
matrices 2-d row-major. Inputs crossing the public API are validated to be
finite; operations are pure.
"""

from __future__ import annotations

import numpy as np


def as_vector(x) -> np.ndarray:
    """Coerce to a finite 1-d float64 array."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a vector, got shape {v.shape}")
    if v.size == 0:
        raise ValueError("empty vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    return v


def as_matrix(m) -> np.ndarray:
    """Coerce to a finite 2-d float64 array."""
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {a.shape}")
    if a.size == 0:
        raise ValueError("empty matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def svd_small(m) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full SVD of a small dense matrix: M = U @ diag(S) @ V.T.

    Returns (U, S, V) with orthonormal-column U, V and S non-negative,
    non-increasing. Reduced form: U is rows x p, V is cols x p with
    p = min(rows, cols).
    """
    a = as_matrix(m)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    return u, s, vt.T


def haar_forward(x) -> np.ndarray:
    """Orthonormal full Haar analysis of a power-of-two length vector.

    Coefficient layout: index 0 holds the overall scaling coefficient,
    indices [2**j, 2**(j+1)) hold the level-j details, coarse to fine.
    """
    v = as_vector(x)
    n = v.size
    if n & (n - 1):
        raise ValueError("haar dimension: length must be a power of two")
    out = np.empty_like(v)
    approx = v.copy()
    h = n
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    while h > 1:
        h //= 2
        a = approx[0 : 2 * h : 2]
        b = approx[1 : 2 * h : 2]
        out[h : 2 * h] = (a - b) * inv_sqrt2
        approx[:h] = (a + b) * inv_sqrt2
    out[0] = approx[0]
    return out


def haar_inverse(c) -> np.ndarray:
    """Inverse of :func:`haar_forward`."""
    v = as_vector(c)
    n = v.size
    if n & (n - 1):
        raise ValueError("haar dimension: length must be a power of two")
    out = v.copy()
    h = 1
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    buf = np.empty_like(v)
    while h < n:
        a = out[:h]
        d = out[h : 2 * h]
        buf[0 : 2 * h : 2] = (a + d) * inv_sqrt2
        buf[1 : 2 * h : 2] = (a - d) * inv_sqrt2
        out[: 2 * h] = buf[: 2 * h]
        h *= 2
    return out


def haar_forward_rows(x: np.ndarray) -> np.ndarray:
    """Row-wise :func:`haar_forward` on a 2-d batch."""
    a = np.array(x, dtype=np.float64)
    n = a.shape[1]
    if n & (n - 1):
        raise ValueError("haar dimension: length must be a power of two")
    out = np.empty_like(a)
    approx = a.copy()
    h = n
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    while h > 1:
        h //= 2
        p = approx[:, 0 : 2 * h : 2]
        q = approx[:, 1 : 2 * h : 2]
        out[:, h : 2 * h] = (p - q) * inv_sqrt2
        approx[:, :h] = (p + q) * inv_sqrt2
    out[:, 0] = approx[:, 0]
    return out


def haar_inverse_rows(c: np.ndarray) -> np.ndarray:
    """Row-wise :func:`haar_inverse` on a 2-d batch."""
    a = np.array(c, dtype=np.float64)
    n = a.shape[1]
    if n & (n - 1):
        raise ValueError("haar dimension: length must be a power of two")
    out = a.copy()
    buf = np.empty_like(a)
    h = 1
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    while h < n:
        p = out[:, :h]
        d = out[:, h : 2 * h]
        buf[:, 0 : 2 * h : 2] = (p + d) * inv_sqrt2
        buf[:, 1 : 2 * h : 2] = (p - d) * inv_sqrt2
        out[:, : 2 * h] = buf[:, : 2 * h]
        h *= 2
    return out
