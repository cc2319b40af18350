"""Driving the solvers with a denoiser living in another process.

The bridge speaks a small binary protocol over the subprocess's standard
streams (magic GPDN, version, count, noise level, float64 payload). Here
the shipped pure-Python hard-threshold plugin is compared bit-for-bit-ish
against the built-in denoiser, probed for idempotence, and then used
directly inside a plug-and-play recovery.
"""

import sys
from pathlib import Path

import numpy as np

from gpgd import (
    ExternalDenoiser,
    HaarSparseK,
    RngStream,
    SolveConfig,
    builtin_haar_ht,
    default_x0,
    fit_linear_rate,
    pnp_pgm,
    probe_fixed_point,
    random_mask,
)

n, k, seed = 64, 4, 7
plugin = [sys.executable, str(Path(__file__).resolve().parents[1] / "plugins" / "haar_ht_denoiser.py"),
          "--k", str(k)]

builtin = builtin_haar_ht(n, k)
model = HaarSparseK(n, k)
target = model.sample_banded(RngStream(seed, 101), 16)  # coarse atoms survive erasure
op = random_mask(n, 0.3, RngStream(seed, 7))
y = op.apply(target)
x0 = default_x0(op, y, RngStream(seed, 202))

with ExternalDenoiser(plugin, noise_level=0.0) as denoiser:
    worst = 0.0
    for i in range(10):
        x = RngStream(seed, 300 + i).normal(n)
        worst = max(worst, float(np.linalg.norm(denoiser.apply(x) - builtin.apply(x))))
    print(f"max deviation external vs builtin over 10 probes: {worst:.2e}")

    probe = probe_fixed_point(denoiser, x0)
    print(f"idempotence residual of the external denoiser: {probe.residual:.2e} "
          f"(within the observed regime: {not probe.outside_observed_regime})")

    trace = pnp_pgm(op, y, denoiser, SolveConfig(mu=1.0, max_iters=300, stop_tol=1e-13),
                    x0, target=target)
    rate, floor = fit_linear_rate(trace)
    print(f"plug-and-play with the external denoiser: {trace.iterations_used} iterations, "
          f"fitted rate {rate:.4f}, final error {trace.errors_to_target[-1]:.2e}")
