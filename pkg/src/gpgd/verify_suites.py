"""Named self-check suites behind the ``verify`` command.

Each suite re-derives a family of identities or inequalities the library is
built on and returns a list of failure strings (empty = pass). They are
deterministic: all randomness is seeded locally.
"""

from __future__ import annotations

from math import sqrt

import numpy as np

from . import certify, models, operators, solvers
from .bridge import ModelProjection
from .rng import RngStream


def _check(failures: list[str], ok: bool, label: str):
    if not ok:
        failures.append(label)


def suite_lemmas_q_r() -> list[str]:
    failures: list[str] = []
    rng = RngStream(1001, 0)
    for i in range(200):
        n = 4 + int(rng.integers(1, 5)[0])
        u, z, x = rng.normal(n), rng.normal(n), rng.normal(n)
        c = 1.0 + 3.0 * rng.uniform(1)[0]
        lhs = certify.q_value(c, u, z, x)
        rhs = float(np.linalg.norm(u - x) ** 2 - c * np.linalg.norm(z - x) ** 2)
        _check(failures, abs(lhs - rhs) <= 1e-10 * (1.0 + abs(rhs)), f"q identity, case {i}")
    model = models.SparseK(8, 2)
    for i in range(40):
        u = model.sample(rng)
        z = rng.normal(8)
        c = 1.2 + 2.5 * rng.uniform(1)[0]
        rv = certify.r_value(c, model, u, z)
        xs = certify.q_argmax(c, model, u, z)
        _check(
            failures,
            abs(certify.q_value(c, u, z, xs) - rv) <= 1e-9 * (1.0 + abs(rv)),
            f"r attains its closed form, case {i}",
        )
        sampled = max(certify.q_value(c, u, z, model.sample(rng)) for _ in range(200))
        _check(failures, sampled <= rv + 1e-9, f"r dominates sampled q, case {i}")
    return failures


def suite_ht_constants() -> list[str]:
    failures: list[str] = []
    beta = certify.ht_beta_constant()
    _check(failures, abs(beta**2 - (3.0 + sqrt(5.0)) / 2.0) <= 1e-15, "beta^2 closed form")
    _check(failures, abs(beta * certify.ht_delta_threshold() - 1.0) <= 1e-15, "threshold reciprocal")
    _check(failures, certify.ht_delta_threshold() < 1.0 / sqrt(2.0), "below the convex threshold")
    c_star = (3.0 + sqrt(5.0)) / 2.0
    for k in (3, 10, 100):
        expected = c_star**2 / (c_star - 1.0) - 2.0 * c_star + 1.0
        _check(failures, abs(certify.f_k(c_star, k, 1.0) - expected) <= 1e-12, f"f_k(1) closed form, k={k}")
        _check(failures, abs(certify.f_k(c_star, k, 1.0)) <= 1e-10, f"f_k(1) root, k={k}")
    z = np.zeros(5)
    z[:4] = 1.0
    root = certify.optimal_beta_bisect(models.SparseK(5, 3), [z]) ** 2
    _check(failures, abs(root - (9.0 + sqrt(33.0)) / 6.0) <= 1e-6, "k=3 exact threshold")
    return failures


def suite_projections() -> list[str]:
    failures: list[str] = []
    rng = RngStream(2002, 0)
    zoo: list[models.ModelSet] = [
        models.SparseK(9, 3),
        models.HaarSparseK(16, 4),
        models.LowRank(4, 4, 1),
        models.two_lines(0.05),
    ]
    q, _ = np.linalg.qr(rng.normal(36).reshape(9, 4))
    zoo.append(models.Subspace(q))
    for model in zoo:
        name = type(model).__name__
        for i in range(25):
            z = rng.normal(model.ambient_dim)
            p = model.project_orth(z).canonical
            _check(
                failures,
                abs(float(p @ (p - z))) <= 1e-9 * (1.0 + float(z @ z)),
                f"{name}: projection residual orthogonal to projection, case {i}",
            )
            _check(
                failures,
                abs(float(z @ z) - float(p @ p) - float((z - p) @ (z - p)))
                <= 1e-9 * (1.0 + float(z @ z)),
                f"{name}: Pythagoras split, case {i}",
            )
            p2 = model.project_orth(p).canonical
            _check(
                failures,
                float(np.linalg.norm(p2 - p)) <= 1e-12 * (1.0 + float(np.linalg.norm(p))),
                f"{name}: idempotent, case {i}",
            )
            for lam in (-2.0, 0.5, 3.0):
                pl = model.project_orth(lam * z).canonical
                _check(
                    failures,
                    abs(np.linalg.norm(lam * z - pl) - abs(lam) * np.linalg.norm(z - p))
                    <= 1e-9 * (1.0 + abs(lam) * float(np.linalg.norm(z))),
                    f"{name}: homogeneous distances, case {i}, lam={lam}",
                )
            y = rng.normal(model.ambient_dim)
            py = model.project_orth(y).canonical
            _check(
                failures,
                abs(np.linalg.norm(z - p) - np.linalg.norm(y - py))
                <= float(np.linalg.norm(z - y)) + 1e-9,
                f"{name}: distance is 1-Lipschitz, case {i}",
            )
    return failures


def suite_rip() -> list[str]:
    failures: list[str] = []
    for seed in range(5):
        op = operators.gaussian_dense(6, 8, RngStream(3000 + seed, 0))
        model = models.SparseK(8, 1)
        exact = operators.ric_exact_sparse(op, 1.0, 2)
        mc = operators.ric_monte_carlo(op, model, 1.0, RngStream(3100 + seed, 0), 400)
        _check(failures, mc.delta <= exact.delta + 1e-12, f"monte carlo dominated, seed {seed}")
        w = exact.witness
        direct = float(np.linalg.norm(w - op.gram_apply(w))) / float(np.linalg.norm(w))
        _check(failures, abs(direct - exact.delta) <= 1e-9, f"witness reproduces delta, seed {seed}")
        _check(
            failures,
            operators.rip_check(op, model, 1.0, RngStream(3200 + seed, 0), 300, delta=exact.delta),
            f"two-sided isometry, seed {seed}",
        )
    return failures


def suite_contraction() -> list[str]:
    failures: list[str] = []
    rng = RngStream(4004, 0)
    a = np.eye(10) + 0.05 * rng.normal(100).reshape(10, 10)
    op = operators.DenseOp(a)
    model = models.SparseK(10, 2)
    mu, delta = operators.optimal_scale(op, model, exact=True)
    beta = certify.ht_beta_constant()
    _check(failures, delta * beta < 1.0, "contractive regime reached")
    xh = model.sample(RngStream(4005, 0))
    y = op.apply(xh)
    tr = solvers.gpgd(
        op, y, ModelProjection(model),
        solvers.SolveConfig(mu=mu, max_iters=200), RngStream(4006, 0).normal(10), target=xh,
    )
    errs = np.asarray(tr.errors_to_target)
    for i, (e0, e1) in enumerate(zip(errs[:-1], errs[1:])):
        _check(failures, e1 <= (delta * beta + 1e-9) * e0 + 1e-15, f"per-step contraction, step {i}")
    limit = solvers.oracle_sparse(op, y, 2)
    _check(failures, float(np.linalg.norm(tr.final - limit)) <= 1e-8, "limit matches the oracle")
    return failures


SUITES = {
    "lemmas-q-r": suite_lemmas_q_r,
    "ht-constants": suite_ht_constants,
    "projections": suite_projections,
    "rip": suite_rip,
    "contraction": suite_contraction,
}


def run_suite(name: str) -> list[str]:
    if name == "all":
        out: list[str] = []
        for suite_name, fn in SUITES.items():
            out.extend(f"{suite_name}: {msg}" for msg in fn())
        return out
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name]()
