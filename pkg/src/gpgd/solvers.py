"""Iterative recovery algorithms, each emitting a full per-iteration trace.

All solvers share one loop skeleton: a step map applied until the relative
iterate change drops below the stopping tolerance or the iteration budget
runs out, with a divergence guard that aborts (keeping the partial trace)
when the iterate norm explodes. The projected method applies the model map
first and takes the gradient step at the projected point; the plug-and-play
variant reverses that order; the regularized gradient method averages the
data-fit direction with a denoiser residual; plain gradient descent on the
quadratic data fit is the baseline.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .operators import MeasurementOp
from .rng import RngStream


@dataclass
class SolveConfig:
    mu: float
    lam: float = 0.0
    max_iters: int = 500
    stop_tol: float = 1e-12
    record_diagnostics: bool = True

    def __post_init__(self):
        if self.mu <= 0.0:
            raise ValueError("step size must be positive")
        if self.max_iters < 1:
            raise ValueError("need at least one iteration")
        if self.lam < 0.0:
            raise ValueError("denoiser weight must be non-negative")


@dataclass
class SolveTrace:
    iterates: list[np.ndarray] = field(default_factory=list)
    errors_to_target: list[float] | None = None
    projected_points: list[np.ndarray] | None = None
    converged: bool = False
    iterations_used: int = 0

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]


class DivergenceError(RuntimeError):
    """Solver blew up; the partial trace rides along for post-mortems."""

    def __init__(self, message: str, trace: SolveTrace):
        super().__init__(message)
        self.trace = trace


def default_x0(op: MeasurementOp, y: np.ndarray, rng: RngStream) -> np.ndarray:
    """Uniform noise with its mean reset to the adjoint back-projection mean."""
    x0 = rng.uniform(op.in_dim)
    return x0 - x0.mean() + float(op.adjoint(y).mean())


def _run(step, op, y, cfg: SolveConfig, x0, target, record_projected, project=None):
    x = np.array(x0, dtype=float)
    if x.size != op.in_dim:
        raise ValueError("initial point does not match the operator input dim")
    trace = SolveTrace(
        errors_to_target=[] if target is not None else None,
        projected_points=[] if (record_projected and cfg.record_diagnostics) else None,
    )
    guard = 1e8 * (1.0 + float(np.linalg.norm(op.adjoint(y))))

    def record(xn):
        trace.iterates.append(xn.copy())
        if trace.errors_to_target is not None:
            trace.errors_to_target.append(float(np.linalg.norm(xn - target)))
        if trace.projected_points is not None and project is not None:
            trace.projected_points.append(project(xn))

    record(x)
    for it in range(cfg.max_iters):
        xn = step(x)
        if not np.all(np.isfinite(xn)):
            raise DivergenceError("non-finite iterate at step %d" % (it + 1), trace)
        record(xn)
        trace.iterations_used = it + 1
        if float(np.linalg.norm(xn)) > guard:
            raise DivergenceError("iterate norm exploded at step %d" % (it + 1), trace)
        if float(np.linalg.norm(xn - x)) <= cfg.stop_tol * max(1.0, float(np.linalg.norm(x))):
            trace.converged = True
            x = xn
            break
        x = xn
    return trace


def gpgd(op, y, proj, cfg: SolveConfig, x0, target=None) -> SolveTrace:
    """Projected gradient iteration: project first, then step at the projection.

    x_{n+1} = P(x_n) - mu * A^T (A P(x_n) - y)
    """
    y = np.asarray(y, dtype=float)

    def step(x):
        p = proj.apply(x)
        return p - cfg.mu * op.adjoint(op.apply(p) - y)

    return _run(step, op, y, cfg, x0, target, True, project=proj.apply)


def pnp_pgm(op, y, denoiser, cfg: SolveConfig, x0, target=None) -> SolveTrace:
    """Plug-and-play proximal gradient: gradient step first, then the denoiser.

    x_{n+1} = D(x_n - mu * A^T (A x_n - y))
    """
    y = np.asarray(y, dtype=float)

    def step(x):
        return denoiser.apply(x - cfg.mu * op.adjoint(op.apply(x) - y))

    return _run(step, op, y, cfg, x0, target, True, project=denoiser.apply)


def gm_red(op, y, denoiser, cfg: SolveConfig, x0, target=None) -> SolveTrace:
    """Gradient method regularized by the denoiser residual.

    x_{n+1} = x_n - mu * (A^T (A x_n - y) + lam * (x_n - D(x_n)))
    """
    y = np.asarray(y, dtype=float)

    def step(x):
        return x - cfg.mu * (op.adjoint(op.apply(x) - y) + cfg.lam * (x - denoiser.apply(x)))

    return _run(step, op, y, cfg, x0, target, True, project=denoiser.apply)


def landweber(op, y, cfg: SolveConfig, x0, target=None) -> SolveTrace:
    """Plain gradient descent on the quadratic data fit."""
    y = np.asarray(y, dtype=float)

    def step(x):
        return x - cfg.mu * op.adjoint(op.apply(x) - y)

    return _run(step, op, y, cfg, x0, target, False)


def oracle_sparse(op, y, k: int, budget: int = 100_000) -> np.ndarray:
    """Globally optimal k-sparse least-squares fit by support enumeration.

    Exhausts supports of size k (covering all smaller supports), solving the
    restricted least squares exactly; ties keep the lexicographically first
    support. Exponential cost: guarded by the enumeration budget.
    """
    from math import comb

    a = getattr(op, "a", None)
    if a is None:
        raise ValueError("the exhaustive oracle needs a dense operator")
    m, n = a.shape
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    if comb(n, k) > budget:
        raise ValueError("enumeration budget exceeded for the sparse oracle")
    y = np.asarray(y, dtype=float)
    best_obj = np.inf
    best_x = None
    for support in combinations(range(n), k):
        cols = a[:, support]
        coef, *_ = np.linalg.lstsq(cols, y, rcond=None)
        resid = y - cols @ coef
        obj = 0.5 * float(resid @ resid)
        if obj < best_obj:  # strict: ties keep the lexicographically first support
            best_obj = obj
            best_x = np.zeros(n)
            best_x[list(support)] = coef
    return best_x
