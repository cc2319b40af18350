"""Low-dimensional model sets and their orthogonal (metric) projections.

Every model lives in a flat real ambient space: matrices are handled as
row-major flattened vectors so solvers and measurement operators never need
to care which variant they face. All variants are homogeneous (closed under
real scaling) and proximinal (the distance minimizer always exists), and the
canonical projection uses a deterministic lowest-index rule on ties; the
full minimizer set can be requested where it is finite.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .linalg import (
    as_matrix,
    as_vector,
    haar_forward,
    haar_forward_rows,
    haar_inverse,
    haar_inverse_rows,
    svd_small,
)
from .rng import RngStream

MAX_TIE_MINIMIZERS = 64


@dataclass
class ProjectionResult:
    """Canonical nearest point plus, on request, every tied minimizer."""

    canonical: np.ndarray
    minimizers: list[np.ndarray] | None = None


def hard_threshold(z: np.ndarray, k: int) -> np.ndarray:
    """Keep the k largest-magnitude entries, lowest index winning ties."""
    out = np.zeros_like(z)
    if k >= z.size:
        return z.copy()
    keep = np.argsort(-np.abs(z), kind="stable")[:k]
    out[keep] = z[keep]
    return out


def hard_threshold_rows(z: np.ndarray, k: int) -> np.ndarray:
    """Row-wise :func:`hard_threshold` on a 2-d batch."""
    if k >= z.shape[1]:
        return z.copy()
    order = np.argsort(-np.abs(z), kind="stable", axis=1)[:, :k]
    out = np.zeros_like(z)
    rows = np.arange(z.shape[0])[:, None]
    out[rows, order] = z[rows, order]
    return out


class ModelSet:
    """Base class; concrete variants implement projection and sampling."""

    ambient_dim: int

    def project_orth(self, z, all_minimizers: bool = False) -> ProjectionResult:
        raise NotImplementedError

    def sample(self, rng: RngStream) -> np.ndarray:
        raise NotImplementedError

    def spanning_set(self) -> np.ndarray:
        """Rows are model elements whose span is span(Sigma)."""
        raise NotImplementedError

    def project_rows(self, z: np.ndarray) -> np.ndarray:
        """Canonical projection applied to each row of a batch."""
        return np.stack([self.project_orth(row).canonical for row in z])

    def sample_rows(self, rng: RngStream, count: int) -> np.ndarray:
        return np.stack([self.sample(rng) for _ in range(count)])

    def _check_dim(self, z: np.ndarray):
        if z.size != self.ambient_dim:
            raise ValueError(
                f"dimension mismatch: point has dim {z.size}, model expects {self.ambient_dim}"
            )

    def membership(self, x, tol: float = 1e-12) -> bool:
        x = as_vector(x)
        self._check_dim(x)
        p = self.project_orth(x).canonical
        return float(np.linalg.norm(x - p)) <= tol * (1.0 + float(np.linalg.norm(x)))

    def secant_sample(self, rng: RngStream, max_retries: int = 16) -> np.ndarray:
        """Unit-norm difference of two independently sampled model elements."""
        for _ in range(max_retries):
            d = self.sample(rng) - self.sample(rng)
            nrm = float(np.linalg.norm(d))
            if nrm > 1e-12:
                return d / nrm
        raise ValueError("degenerate secant: sampled pairs kept coinciding")


class SparseK(ModelSet):
    """Vectors with at most k nonzero entries in dimension n."""

    def __init__(self, n: int, k: int):
        if not 1 <= k <= n:
            raise ValueError("need 1 <= k <= n")
        self.n = int(n)
        self.k = int(k)
        self.ambient_dim = self.n

    def project_orth(self, z, all_minimizers: bool = False) -> ProjectionResult:
        z = as_vector(z)
        self._check_dim(z)
        canonical = hard_threshold(z, self.k)
        if not all_minimizers:
            return ProjectionResult(canonical)
        return ProjectionResult(canonical, self._tie_minimizers(z))

    def _tie_minimizers(self, z: np.ndarray) -> list[np.ndarray]:
        mags = np.abs(z)
        if self.k >= self.n:
            return [z.copy()]
        boundary = np.sort(mags)[::-1][self.k - 1]
        above = np.flatnonzero(mags > boundary)
        tied = np.flatnonzero(mags == boundary)
        slots = self.k - above.size
        n_min = _comb(tied.size, slots)
        if n_min > MAX_TIE_MINIMIZERS:
            raise ValueError(
                f"too many tied minimizers ({n_min} > {MAX_TIE_MINIMIZERS})"
            )
        out = []
        for pick in combinations(tied.tolist(), slots):
            u = np.zeros_like(z)
            keep = np.concatenate([above, np.array(pick, dtype=int)]) if above.size else np.array(pick, dtype=int)
            u[keep] = z[keep]
            out.append(u)
        return out

    def project_rows(self, z: np.ndarray) -> np.ndarray:
        return hard_threshold_rows(z, self.k)

    def sample(self, rng: RngStream) -> np.ndarray:
        support = rng.choice(self.n, self.k)
        x = np.zeros(self.n)
        x[support] = rng.normal(self.k)
        return x

    def sample_rows(self, rng: RngStream, count: int) -> np.ndarray:
        out = np.zeros((count, self.n))
        vals = rng.normal(count * self.k).reshape(count, self.k)
        keys = rng.uniform(count * self.n).reshape(count, self.n)
        support = np.argsort(keys, axis=1)[:, : self.k]
        out[np.arange(count)[:, None], support] = vals
        return out

    def spanning_set(self) -> np.ndarray:
        return np.eye(self.n)


class Subspace(ModelSet):
    """A single linear subspace given by an orthonormal-column basis."""

    def __init__(self, basis):
        q = as_matrix(basis)
        gram = q.T @ q
        if not np.allclose(gram, np.eye(q.shape[1]), atol=1e-10):
            raise ValueError("basis columns must be orthonormal")
        self.basis = q
        self.ambient_dim = q.shape[0]

    def project_orth(self, z, all_minimizers: bool = False) -> ProjectionResult:
        z = as_vector(z)
        self._check_dim(z)
        p = self.basis @ (self.basis.T @ z)
        return ProjectionResult(p, [p] if all_minimizers else None)

    def project_rows(self, z: np.ndarray) -> np.ndarray:
        return (z @ self.basis) @ self.basis.T

    def sample(self, rng: RngStream) -> np.ndarray:
        return self.basis @ rng.normal(self.basis.shape[1])

    def spanning_set(self) -> np.ndarray:
        return self.basis.T


class UnionOfSubspaces(ModelSet):
    """Finite union of linear subspaces with a shared ambient dimension."""

    def __init__(self, bases):
        self.subspaces = [Subspace(b) for b in bases]
        if not self.subspaces:
            raise ValueError("need at least one subspace")
        dims = {s.ambient_dim for s in self.subspaces}
        if len(dims) != 1:
            raise ValueError("subspaces must share the ambient dimension")
        self.ambient_dim = dims.pop()

    def project_orth(self, z, all_minimizers: bool = False) -> ProjectionResult:
        z = as_vector(z)
        self._check_dim(z)
        projections = [s.project_orth(z).canonical for s in self.subspaces]
        dists = np.array([np.linalg.norm(z - p) for p in projections])
        best = int(np.argmin(dists))
        if not all_minimizers:
            return ProjectionResult(projections[best])
        cutoff = dists[best] + 1e-12 * (1.0 + dists[best])
        tied = [projections[i] for i in np.flatnonzero(dists <= cutoff)]
        out: list[np.ndarray] = []
        for p in tied:  # drop coincident copies (z in an intersection)
            if all(np.linalg.norm(p - q) > 1e-12 * (1.0 + np.linalg.norm(p)) for q in out):
                out.append(p)
        return ProjectionResult(projections[best], out)

    def sample(self, rng: RngStream) -> np.ndarray:
        i = int(rng.integers(1, len(self.subspaces))[0])
        return self.subspaces[i].sample(rng)

    def spanning_set(self) -> np.ndarray:
        return np.vstack([s.spanning_set() for s in self.subspaces])


class LowRank(ModelSet):
    """rows x cols matrices of rank at most r, flattened row-major."""

    def __init__(self, rows: int, cols: int, r: int):
        if not 1 <= r <= min(rows, cols):
            raise ValueError("need 1 <= r <= min(rows, cols)")
        self.rows = int(rows)
        self.cols = int(cols)
        self.r = int(r)
        self.ambient_dim = self.rows * self.cols

    def project_orth(self, z, all_minimizers: bool = False) -> ProjectionResult:
        z = as_vector(z)
        self._check_dim(z)
        m = z.reshape(self.rows, self.cols)
        if self.r >= min(self.rows, self.cols):
            return ProjectionResult(z.copy())
        u, s, v = svd_small(m)
        trunc = (u[:, : self.r] * s[: self.r]) @ v[:, : self.r].T
        return ProjectionResult(trunc.reshape(-1))

    def sample(self, rng: RngStream) -> np.ndarray:
        left = rng.normal(self.rows * self.r).reshape(self.rows, self.r)
        right = rng.normal(self.r * self.cols).reshape(self.r, self.cols)
        return (left @ right).reshape(-1) / np.sqrt(self.r)

    def spanning_set(self) -> np.ndarray:
        return np.eye(self.ambient_dim)  # elementary matrices are rank one


class HaarSparseK(ModelSet):
    """Signals with at most k nonzero coefficients in the orthonormal Haar basis."""

    def __init__(self, n: int, k: int):
        if n & (n - 1):
            raise ValueError("haar dimension: length must be a power of two")
        if not 1 <= k <= n:
            raise ValueError("need 1 <= k <= n")
        self.n = int(n)
        self.k = int(k)
        self.ambient_dim = self.n

    def project_orth(self, z, all_minimizers: bool = False) -> ProjectionResult:
        z = as_vector(z)
        self._check_dim(z)
        coeffs = haar_forward(z)
        kept = hard_threshold(coeffs, self.k)
        return ProjectionResult(haar_inverse(kept))

    def project_rows(self, z: np.ndarray) -> np.ndarray:
        return haar_inverse_rows(hard_threshold_rows(haar_forward_rows(z), self.k))

    def sample(self, rng: RngStream) -> np.ndarray:
        return self.sample_banded(rng, self.n)

    def sample_banded(self, rng: RngStream, band: int) -> np.ndarray:
        """Model element whose support lies among the first `band` coefficients.

        Restricting to coarse scales yields piecewise-constant-like signals
        that survive blurring; every output is still an exact model element.
        """
        band = min(max(band, self.k), self.n)
        support = rng.choice(band, self.k)
        coeffs = np.zeros(self.n)
        coeffs[support] = rng.normal(self.k)
        return haar_inverse(coeffs)

    def spanning_set(self) -> np.ndarray:
        return haar_inverse_rows(np.eye(self.n))


def _comb(n: int, k: int) -> int:
    from math import comb

    return comb(n, k) if 0 <= k <= n else 0


# Module-level spellings of the model operations.


def project_orth(model: ModelSet, z, all_minimizers: bool = False) -> ProjectionResult:
    return model.project_orth(z, all_minimizers=all_minimizers)


def membership(model: ModelSet, x, tol: float = 1e-12) -> bool:
    return model.membership(x, tol=tol)


def sample_model(model: ModelSet, rng: RngStream) -> np.ndarray:
    return model.sample(rng)


def secant_sample(model: ModelSet, rng: RngStream) -> np.ndarray:
    return model.secant_sample(rng)


def two_lines(eps: float) -> UnionOfSubspaces:
    """The planar union of the lines spanned by (1, eps) and (1, -eps)."""
    v = np.array([[1.0], [eps]]) / np.sqrt(1.0 + eps * eps)
    w = np.array([[1.0], [-eps]]) / np.sqrt(1.0 + eps * eps)
    return UnionOfSubspaces([v, w])
