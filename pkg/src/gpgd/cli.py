"""Command-line surface: recovery runs, constant certification, self-checks.

Exit codes are a stable contract: 0 success, 2 usage or configuration
errors, 3 numerical failure (divergence, failing verification suite).
Experiment configs are TOML (JSON accepted as an alternative); unknown keys
are rejected so typos cannot silently change an experiment.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import certify, diagnostics, models, operators, solvers
from .bridge import ExternalDenoiser, HaarThresholdDenoiser, IdentityProjection, ModelProjection
from .images import load_image, psnr
from .rng import RngStream

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    pass


_ALLOWED = {
    "model": {"kind", "n", "k"},
    "operator": {"kind", "m", "seed", "fraction", "sigma"},
    "solver": {"kind", "mu", "lambda", "max_iters", "stop_tol"},
    "projection": {"kind", "command", "noise_level", "timeout"},
    "target": {"kind", "seed", "norm", "band", "path"},
    "init": {"kind", "seed"},
    "output": {"prefix"},
}


def load_config(path: Path) -> dict:
    text = path.read_bytes()
    if path.suffix.lower() == ".json":
        try:
            cfg = json.loads(text.decode())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    else:
        try:
            cfg = tomllib.loads(text.decode())
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    for section, table in cfg.items():
        if section not in _ALLOWED:
            raise ConfigError(f"unknown config section {section!r}")
        if not isinstance(table, dict):
            raise ConfigError(f"section {section!r} must be a table")
        unknown = set(table) - _ALLOWED[section]
        if unknown:
            raise ConfigError(f"unknown key {sorted(unknown)[0]!r} in section {section!r}")
    for required in ("model", "operator", "solver"):
        if required not in cfg:
            raise ConfigError(f"missing config section {required!r}")
    return cfg


def _build_model(cfg: dict):
    table = cfg["model"]
    kind = table.get("kind")
    if kind == "sparse":
        return models.SparseK(int(table["n"]), int(table["k"]))
    if kind == "haar-sparse":
        return models.HaarSparseK(int(table["n"]), int(table["k"]))
    raise ConfigError(f"unknown model kind {kind!r}")


def _build_operator(cfg: dict, n: int):
    table = cfg["operator"]
    kind = table.get("kind")
    if kind == "dense-gaussian":
        return operators.gaussian_dense(int(table["m"]), n, RngStream(int(table.get("seed", 0)), 11))
    if kind == "mask":
        return operators.random_mask(n, float(table.get("fraction", 0.3)), RngStream(int(table.get("seed", 0)), 7))
    if kind == "blur":
        return operators.CircularBlurOp(operators.gaussian_kernel(float(table["sigma"])), n)
    raise ConfigError(f"unknown operator kind {kind!r}")


def _build_projection(cfg: dict, model):
    table = cfg.get("projection", {"kind": "orth"})
    kind = table.get("kind", "orth")
    if kind == "orth":
        return ModelProjection(model)
    if kind == "haar-ht":
        if not isinstance(model, models.HaarSparseK):
            raise ConfigError("haar-ht projection needs a haar-sparse model")
        return HaarThresholdDenoiser(model.n, model.k)
    if kind == "identity":
        return IdentityProjection()
    if kind == "external":
        return ExternalDenoiser(
            table["command"],
            noise_level=float(table.get("noise_level", 0.0)),
            timeout=float(table.get("timeout", 30.0)),
        )
    raise ConfigError(f"unknown projection kind {kind!r}")


def _build_target(cfg: dict, model) -> np.ndarray:
    table = cfg.get("target", {"kind": "sampled", "seed": 0})
    kind = table.get("kind", "sampled")
    if kind == "file":
        return load_image(table["path"]).reshape(-1)
    rng = RngStream(int(table.get("seed", 0)), 101)
    if kind == "sampled":
        x = model.sample(rng)
    elif kind == "sampled-banded":
        if not isinstance(model, models.HaarSparseK):
            raise ConfigError("banded sampling needs a haar-sparse model")
        x = model.sample_banded(rng, int(table.get("band", 32)))
    else:
        raise ConfigError(f"unknown target kind {kind!r}")
    norm = float(table.get("norm", 0.0))
    if norm > 0.0:
        x = x / np.linalg.norm(x) * norm
    return x


def _resolve_mu(cfg: dict, op, model) -> float:
    mu = cfg["solver"].get("mu", "optimal")
    if mu == "optimal":
        if isinstance(op, operators.DenseOp) and isinstance(model, models.SparseK):
            return operators.optimal_scale(op, model, exact=True)[0]
        raise ConfigError("mu='optimal' needs a dense-gaussian operator and a sparse model")
    return float(mu)


def cmd_recover(args) -> int:
    try:
        cfg = load_config(Path(args.config))
        model = _build_model(cfg)
        op = _build_operator(cfg, model.ambient_dim)
        proj = _build_projection(cfg, model)
        target = _build_target(cfg, model)
        if target.size != model.ambient_dim:
            raise ConfigError("target dimension does not match the model")
        mu = _resolve_mu(cfg, op, model)
        solver_table = cfg["solver"]
        solve_cfg = solvers.SolveConfig(
            mu=mu,
            lam=float(solver_table.get("lambda", 0.0)),
            max_iters=int(solver_table.get("max_iters", 500)),
            stop_tol=float(solver_table.get("stop_tol", 1e-12)),
        )
        init = cfg.get("init", {"seed": 0})
        y = op.apply(target)
        if init.get("kind", "matched-noise") == "zeros":
            x0 = np.zeros(model.ambient_dim)
        else:
            x0 = solvers.default_x0(op, y, RngStream(int(init.get("seed", 0)), 202))
        kind = solver_table.get("kind", "gpgd")
        runner = {
            "gpgd": lambda: solvers.gpgd(op, y, proj, solve_cfg, x0, target=target),
            "pnp-pgm": lambda: solvers.pnp_pgm(op, y, proj, solve_cfg, x0, target=target),
            "gm-red": lambda: solvers.gm_red(op, y, proj, solve_cfg, x0, target=target),
            "landweber": lambda: solvers.landweber(op, y, solve_cfg, x0, target=target),
        }.get(kind)
        if runner is None:
            raise ConfigError(f"unknown solver kind {kind!r}")
        prefix = Path(cfg.get("output", {}).get("prefix", args.output_prefix))
    except (ConfigError, KeyError, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    prefix.parent.mkdir(parents=True, exist_ok=True)
    try:
        trace = runner()
    except solvers.DivergenceError as exc:
        _write_trace(prefix, exc.trace)
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    _write_trace(prefix, trace)
    proj_for_metrics = proj if kind != "landweber" else IdentityProjection()
    report = diagnostics.full_report(trace, op, mu, proj_for_metrics, target)
    Path(f"{prefix}_diagnostics.csv").write_bytes(diagnostics.emit_report(report, "csv"))
    Path(f"{prefix}_diagnostics.json").write_bytes(diagnostics.emit_report(report, "json"))
    final_err = report.errors[-1]
    print(f"iterations {trace.iterations_used} converged {trace.converged}")
    print(f"fitted_rate {report.fitted_rate!r}")
    print(f"floor {report.floor!r}")
    print(f"final_error {final_err!r}")
    print(f"psnr_style {float(psnr(trace.final, target))!r}")
    return EXIT_OK


def _write_trace(prefix: Path, trace: solvers.SolveTrace):
    lines = ["n,error,iterate_norm"]
    for i, x in enumerate(trace.iterates):
        err = "" if trace.errors_to_target is None else repr(trace.errors_to_target[i])
        lines.append(f"{i},{err},{float(np.linalg.norm(x))!r}")
    Path(f"{prefix}_trace.csv").write_text("\n".join(lines) + "\n")


def _certify_model(args):
    if args.model == "subspace":
        q, _ = np.linalg.qr(RngStream(args.seed, 31).normal(args.n * args.k).reshape(args.n, args.k))
        return models.Subspace(q)
    if args.model == "eps-lines":
        return models.two_lines(args.eps)
    if args.model == "sparse":
        return models.SparseK(args.n, args.k)
    if args.model == "haar-sparse":
        return models.HaarSparseK(args.n, args.k)
    if args.model == "low-rank":
        side = int(round(args.n ** 0.5)) or 1
        return models.LowRank(side, side, args.k)
    raise ConfigError(f"unknown model tag {args.model!r}")


def cmd_certify(args) -> int:
    try:
        model = _certify_model(args)
        if args.projection == "orth":
            proj = ModelProjection(model)
        elif args.projection == "haar-ht":
            if not isinstance(model, models.HaarSparseK):
                raise ConfigError("haar-ht projection needs a haar-sparse model")
            proj = HaarThresholdDenoiser(model.n, model.k)
        else:
            raise ConfigError(f"unknown projection tag {args.projection!r}")
    except (ConfigError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    cert = certify.beta_lower_sampled(proj, model, RngStream(args.seed, 1), args.trials)
    if args.upper:
        rng = RngStream(args.seed, 2)
        suite = [rng.normal(model.ambient_dim) for _ in range(args.upper_suite)]
        suite += certify.extremal_points(model)
        cert.beta_upper = certify.beta_upper_bisect(proj, model, suite)
    payload = {
        "beta_lower": cert.beta_lower,
        "beta_upper": cert.beta_upper,
        "method": cert.method,
        "witnesses": [
            {"z": w.z.tolist(), "x": w.x.tolist(), "ratio": w.ratio} for w in cert.witnesses
        ],
    }
    print(json.dumps(payload, indent=2))
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify_suites import run_suite

    try:
        failures = run_suite(args.suite)
    except KeyError:
        print(f"unknown suite {args.suite!r}", file=sys.stderr)
        return EXIT_USAGE
    print(json.dumps({"suite": args.suite, "passed": not failures, "failures": failures}, indent=2))
    return EXIT_OK if not failures else EXIT_NUMERICAL


def cmd_ric(args) -> int:
    try:
        if args.op == "identity":
            op = operators.DenseOp(np.eye(args.n))
        elif args.op == "dense-gaussian":
            op = operators.gaussian_dense(args.m, args.n, RngStream(args.seed, 11))
        else:
            print(f"unknown operator tag {args.op!r}", file=sys.stderr)
            return EXIT_USAGE
        model = models.SparseK(args.n, args.k)
        s = min(2 * args.k, args.n)
        if args.optimal_scale:
            mu, _ = operators.optimal_scale(op, model, exact=not args.monte_carlo,
                                            rng=RngStream(args.seed, 13))
        else:
            mu = args.mu
        if args.monte_carlo:
            report = operators.ric_monte_carlo(op, model, mu, RngStream(args.seed, 12), args.trials)
        else:
            report = operators.ric_exact_sparse(op, mu, s)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    payload = asdict(report)
    payload["witness"] = report.witness.tolist()
    print(json.dumps(payload, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpgd",
        description="Low-dimensional recovery experiments and certified constants.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_rec = sub.add_parser("recover", help="run a configured recovery experiment")
    p_rec.add_argument("config", help="TOML (or JSON) experiment file")
    p_rec.add_argument("--output-prefix", default="gpgd_run", help="prefix for output files")
    p_rec.set_defaults(fn=cmd_recover)

    p_cert = sub.add_parser("certify", help="sampled restricted-Lipschitz certificate")
    p_cert.add_argument("--model", required=True,
                        choices=["subspace", "eps-lines", "sparse", "haar-sparse", "low-rank"])
    p_cert.add_argument("--n", type=int, default=8)
    p_cert.add_argument("--k", type=int, default=2)
    p_cert.add_argument("--eps", type=float, default=0.01)
    p_cert.add_argument("--projection", default="orth", choices=["orth", "haar-ht"])
    p_cert.add_argument("--trials", type=int, default=20000)
    p_cert.add_argument("--seed", type=int, default=0)
    p_cert.add_argument("--upper", action="store_true", help="add a suite-relative upper bound")
    p_cert.add_argument("--upper-suite", type=int, default=64)
    p_cert.set_defaults(fn=cmd_certify)

    p_ver = sub.add_parser("verify", help="run a named self-check suite")
    p_ver.add_argument("suite", help="lemmas-q-r | ht-constants | projections | rip | contraction | all")
    p_ver.set_defaults(fn=cmd_verify)

    p_ric = sub.add_parser("ric", help="restricted isometry constant of an operator")
    p_ric.add_argument("--op", default="dense-gaussian", choices=["dense-gaussian", "identity"])
    p_ric.add_argument("--m", type=int, default=6)
    p_ric.add_argument("--n", type=int, default=8)
    p_ric.add_argument("--k", type=int, default=1)
    p_ric.add_argument("--mu", type=float, default=1.0)
    p_ric.add_argument("--seed", type=int, default=0)
    p_ric.add_argument("--monte-carlo", action="store_true")
    p_ric.add_argument("--trials", type=int, default=10000)
    p_ric.add_argument("--optimal-scale", action="store_true")
    p_ric.set_defaults(fn=cmd_ric)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
