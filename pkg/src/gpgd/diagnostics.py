"""Per-iteration certification quantities and convergence-rate fitting.

For a trace converging toward a target, three scalars are tracked at every
iterate: the isometry quotient delta_n of the residual direction, the
projection quotient beta_n, and their product (the per-step rate bound);
a fourth sequence measures how close the projection is to idempotent.
Linear convergence to an approximate fixed point x* shows up as the envelope

    |x_n - target| <= r**(n/2) |x_0 - x*| + |x* - target|

and the fitted rate is the smallest r in [0, 1] whose envelope upper-bounds
the whole recorded error curve. Quotients with vanishing denominators are
reported as absent (None), never clipped.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

from .operators import MeasurementOp
from .solvers import SolveTrace

ABSENT_DENOM = 1e-14

CSV_HEADER = "n,error,delta_n,beta_n,delta_beta_n,idem_n"


@dataclass
class SublinearFits:
    """Log-domain least-squares residuals of C/n and C/n^2 against the errors."""

    residual_inv_n: float
    residual_inv_n2: float
    residual_linear_envelope: float | None = None
    degenerate: bool = False


@dataclass
class DiagnosticsReport:
    errors: list[float] = field(default_factory=list)
    delta_seq: list[float | None] = field(default_factory=list)
    beta_seq: list[float | None] = field(default_factory=list)
    rate_seq: list[float | None] = field(default_factory=list)
    idem_seq: list[float | None] = field(default_factory=list)
    fitted_rate: float | None = None
    floor: float | None = None
    sublinear: SublinearFits | None = None

    def max_rate(self) -> float | None:
        vals = [v for v in self.rate_seq if v is not None]
        return max(vals) if vals else None


def iterate_metrics(trace: SolveTrace, op: MeasurementOp, mu: float, proj, target) -> DiagnosticsReport:
    """Fill the per-iterate sequences; rate fitting is a separate pass."""
    target = np.asarray(target, dtype=float)
    report = DiagnosticsReport(errors=[float(np.linalg.norm(x - target)) for x in trace.iterates])
    projected = trace.projected_points
    for i, x in enumerate(trace.iterates):
        p = projected[i] if projected is not None else proj.apply(x)
        w = p - target
        den_w = float(np.linalg.norm(w))
        den_x = float(np.linalg.norm(x - target))
        den_p = float(np.linalg.norm(p))
        delta = None
        if den_w >= ABSENT_DENOM:
            delta = float(np.linalg.norm(w - mu * op.gram_apply(w))) / den_w
        beta = den_w / den_x if den_x >= ABSENT_DENOM else None
        idem = None
        if den_p >= ABSENT_DENOM:
            idem = float(np.linalg.norm(proj.apply(p) - p)) / den_p
        report.delta_seq.append(delta)
        report.beta_seq.append(beta)
        report.rate_seq.append(delta * beta if delta is not None and beta is not None else None)
        report.idem_seq.append(idem)
    return report


def _envelope(r: float, n: np.ndarray, e0_to_limit: float, floor: float) -> np.ndarray:
    return np.power(r, n / 2.0) * e0_to_limit + floor


def envelope_bounds_errors(r: float, trace: SolveTrace, slack: float = 1e-9) -> bool:
    """Re-verification that the fitted envelope dominates the error curve."""
    errors = np.asarray(trace.errors_to_target, dtype=float)
    e0 = float(np.linalg.norm(trace.iterates[0] - trace.iterates[-1]))
    env = _envelope(r, np.arange(errors.size), e0, errors[-1])
    return bool(np.all(env >= errors * (1.0 - slack) - slack))


def fit_linear_rate(trace: SolveTrace, tol: float = 1e-6) -> tuple[float, float]:
    """Smallest r in [0, 1] whose envelope dominates the recorded errors.

    The limit point is approximated by the final iterate, so the floor is
    the terminal error; (1.0, floor) is returned when no r < 1 works.
    """
    if trace.errors_to_target is None or len(trace.errors_to_target) < 5:
        raise ValueError("need at least five recorded errors to fit a rate")
    errors = np.asarray(trace.errors_to_target, dtype=float)
    floor = float(errors[-1])
    e0 = float(np.linalg.norm(trace.iterates[0] - trace.iterates[-1]))
    n = np.arange(errors.size)
    slack = 1e-12 * (1.0 + errors)

    def fits(r: float) -> bool:
        return bool(np.all(_envelope(r, n, e0, floor) >= errors - slack))

    if not fits(1.0):
        return 1.0, floor
    if fits(0.0):
        return 0.0, floor
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if fits(mid):
            hi = mid
        else:
            lo = mid
    return hi, floor


def sublinear_fits(trace: SolveTrace, fitted: tuple[float, float] | None = None) -> SublinearFits:
    """Residuals of the best C/n and C/n^2 fits to the error curve.

    Fitting happens in log domain with the scale C free, so the residual of
    the power law p is the variance of log(e_n) + p log(n) around its mean.
    A linear-envelope residual is included for comparison when a fitted
    (r, floor) pair is supplied or computable.
    """
    errors = np.asarray(trace.errors_to_target, dtype=float)
    if errors.size < 5:
        raise ValueError("need at least five recorded errors")
    n = np.arange(errors.size)
    usable = (n >= 1) & (errors > 0.0)
    degenerate = int(np.count_nonzero(usable)) < 3
    if degenerate:
        return SublinearFits(np.inf, np.inf, None, True)
    log_e = np.log(errors[usable])
    log_n = np.log(n[usable].astype(float))
    if float(np.ptp(log_e)) < 1e-12:
        degenerate = True

    def residual(p: float) -> float:
        shifted = log_e + p * log_n
        return float(np.sum((shifted - shifted.mean()) ** 2))

    env_residual = None
    if fitted is None:
        try:
            fitted = fit_linear_rate(trace)
        except ValueError:
            fitted = None
    if fitted is not None:
        r, floor = fitted
        e0 = float(np.linalg.norm(trace.iterates[0] - trace.iterates[-1]))
        env = _envelope(r, n, e0, floor)[usable]
        good = env > 0.0
        env_residual = float(np.sum((np.log(env[good]) - log_e[good]) ** 2))
    return SublinearFits(residual(1.0), residual(2.0), env_residual, degenerate)


def full_report(trace: SolveTrace, op: MeasurementOp, mu: float, proj, target) -> DiagnosticsReport:
    """Sequences plus fitted rate, floor and sublinear comparison in one pass."""
    report = iterate_metrics(trace, op, mu, proj, target)
    report.fitted_rate, report.floor = fit_linear_rate(trace)
    report.sublinear = sublinear_fits(trace, (report.fitted_rate, report.floor))
    return report


def _cell(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def emit_report(report: DiagnosticsReport, fmt: str) -> bytes:
    """Serialize a report: 'csv' for the per-iteration table, 'json' for all of it."""
    if fmt == "csv":
        out = io.StringIO()
        out.write(CSV_HEADER + "\n")
        for i, err in enumerate(report.errors):
            row = [
                str(i),
                _cell(err),
                _cell(report.delta_seq[i] if i < len(report.delta_seq) else None),
                _cell(report.beta_seq[i] if i < len(report.beta_seq) else None),
                _cell(report.rate_seq[i] if i < len(report.rate_seq) else None),
                _cell(report.idem_seq[i] if i < len(report.idem_seq) else None),
            ]
            out.write(",".join(row) + "\n")
        return out.getvalue().encode()
    if fmt == "json":
        payload = {
            "errors": report.errors,
            "delta_seq": report.delta_seq,
            "beta_seq": report.beta_seq,
            "rate_seq": report.rate_seq,
            "idem_seq": report.idem_seq,
            "fitted_rate": report.fitted_rate,
            "floor": report.floor,
            "sublinear": None
            if report.sublinear is None
            else {
                "residual_inv_n": _json_float(report.sublinear.residual_inv_n),
                "residual_inv_n2": _json_float(report.sublinear.residual_inv_n2),
                "residual_linear_envelope": report.sublinear.residual_linear_envelope,
                "degenerate": report.sublinear.degenerate,
            },
        }
        return json.dumps(payload, indent=2).encode()
    raise ValueError(f"unsupported report format: {fmt!r}")


def _json_float(x: float) -> float | str:
    return x if np.isfinite(x) else "inf"


def parse_report_json(data: bytes) -> dict:
    return json.loads(data.decode())
