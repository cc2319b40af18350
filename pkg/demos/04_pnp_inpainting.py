"""Plug-and-play recovery of a Haar-sparse signal, with full diagnostics.

A coarse-scale Haar-sparse signal is observed through three degradations
(30% erasure, light blur, heavy blur) and recovered by the plug-and-play
proximal gradient iteration with the built-in Haar hard-threshold denoiser.
For each run the per-iterate isometry and projection quotients are tracked,
the linear-rate envelope is fitted, and the fit is compared against 1/n and
1/n^2 power laws. Reports land in ./out as CSV/JSON.
"""

from pathlib import Path

import numpy as np

from gpgd import (
    CircularBlurOp,
    RngStream,
    SolveConfig,
    HaarSparseK,
    builtin_haar_ht,
    default_x0,
    emit_report,
    full_report,
    gaussian_kernel,
    pnp_pgm,
    random_mask,
)

n, k, seed = 256, 8, 3
model = HaarSparseK(n, k)
denoiser = builtin_haar_ht(n, k)
target = model.sample_banded(RngStream(seed, 101), 32)
target = target / np.linalg.norm(target) * 4.0

out = Path("out")
out.mkdir(exist_ok=True)

operators = {
    "inpaint_30pct": random_mask(n, 0.3, RngStream(seed, 7)),
    "blur_sigma_1": CircularBlurOp(gaussian_kernel(1.0), n),
    "blur_sigma_3": CircularBlurOp(gaussian_kernel(3.0), n),
}

for name, op in operators.items():
    y = op.apply(target)
    x0 = default_x0(op, y, RngStream(seed, 202))
    trace = pnp_pgm(op, y, denoiser, SolveConfig(mu=1.0, max_iters=600, stop_tol=1e-13),
                    x0, target=target)
    rep = full_report(trace, op, 1.0, denoiser, target)
    (out / f"{name}.csv").write_bytes(emit_report(rep, "csv"))
    (out / f"{name}.json").write_bytes(emit_report(rep, "json"))
    rates = [v for v in rep.rate_seq if v is not None]
    print(f"{name}: {trace.iterations_used} iterations, "
          f"fitted rate {rep.fitted_rate:.4f}, floor {rep.floor:.2e}")
    print(f"  max per-iterate delta*beta = {max(rates):.4f}  (< 1 certifies the regime)")
    print(f"  envelope residual {rep.sublinear.residual_linear_envelope:.3e} vs "
          f"1/n {rep.sublinear.residual_inv_n:.3e}, 1/n^2 {rep.sublinear.residual_inv_n2:.3e}")

print("\nreports written to ./out (one CSV + JSON per degradation)")
