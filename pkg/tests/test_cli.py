import json
from pathlib import Path

import numpy as np
import pytest

from gpgd.cli import main
from gpgd.images import load_image, psnr, read_gpim, read_pgm, write_gpim
from gpgd.rng import RngStream

REPO = Path(__file__).resolve().parents[1]
CONFIGS = REPO / "configs"

GOLDEN_RIC_M6_N8_SEED0 = 2.357736474038101  # frozen from the exact enumeration


def run_cli(*argv):
    return main(list(argv))


def read_summary(capsys):
    out = capsys.readouterr().out
    summary = {}
    for line in out.strip().splitlines():
        key, _, value = line.partition(" ")
        summary[key] = value
    return summary, out


def test_recover_bundled_sparse_config(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert run_cli("recover", str(CONFIGS / "sparse-iht-small.toml")) == 0
    summary, _ = read_summary(capsys)
    assert float(summary["fitted_rate"]) < 1.0
    for suffix in ("_trace.csv", "_diagnostics.csv", "_diagnostics.json"):
        assert (tmp_path / "out" / ("sparse-iht-small" + suffix)).exists()


def test_recover_blur_rate_ordering(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    rates = {}
    for name in ("haar-blur-low", "haar-blur-high"):
        assert run_cli("recover", str(CONFIGS / f"{name}.toml")) == 0
        payload = json.loads((tmp_path / "out" / f"{name}_diagnostics.json").read_text())
        rates[name] = payload["fitted_rate"]
        assert payload["fitted_rate"] < 1.0
    capsys.readouterr()
    assert rates["haar-blur-high"] >= rates["haar-blur-low"]


def test_recover_malformed_config(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    bad = tmp_path / "bad.toml"
    bad.write_text("[model\nkind = sparse\n")
    assert run_cli("recover", str(bad)) == 2
    assert "config error" in capsys.readouterr().err


def test_recover_rejects_unknown_keys(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    cfg = tmp_path / "unknown.toml"
    cfg.write_text(
        '[model]\nkind = "sparse"\nn = 8\nk = 1\nextra = 1\n'
        '[operator]\nkind = "dense-gaussian"\nm = 6\n[solver]\nkind = "gpgd"\nmu = 1.0\n'
    )
    assert run_cli("recover", str(cfg)) == 2
    assert "unknown key" in capsys.readouterr().err


def test_recover_json_config_alternative(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    cfg = {
        "model": {"kind": "sparse", "n": 12, "k": 2},
        "operator": {"kind": "dense-gaussian", "m": 9, "seed": 1},
        "solver": {"kind": "gpgd", "mu": "optimal", "max_iters": 300},
        "target": {"kind": "sampled", "seed": 2, "norm": 1.0},
        "output": {"prefix": "out/json-run"},
    }
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    assert run_cli("recover", str(path)) == 0
    capsys.readouterr()
    assert (tmp_path / "out" / "json-run_trace.csv").exists()


def test_recover_divergence_exit_code(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    cfg = tmp_path / "diverge.toml"
    cfg.write_text(
        '[model]\nkind = "sparse"\nn = 8\nk = 1\n'
        '[operator]\nkind = "dense-gaussian"\nm = 6\nseed = 0\n'
        '[solver]\nkind = "landweber"\nmu = 1e8\nmax_iters = 50\n'
        '[output]\nprefix = "out/diverge"\n'
    )
    assert run_cli("recover", str(cfg)) == 3
    assert "numerical failure" in capsys.readouterr().err
    assert (tmp_path / "out" / "diverge_trace.csv").exists()  # partial outputs


def test_certify_subspace(capsys):
    assert run_cli("certify", "--model", "subspace", "--n", "6", "--k", "2",
                   "--trials", "2000", "--seed", "1") == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["beta_lower"] <= 1.0 + 1e-9
    assert payload["witnesses"]


def test_certify_eps_lines(capsys):
    assert run_cli("certify", "--model", "eps-lines", "--eps", "0.01",
                   "--trials", "2000", "--seed", "1") == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["beta_lower"] >= 1.9999 - 1e-4


def test_certify_sparse_with_upper_bound(capsys):
    assert run_cli("certify", "--model", "sparse", "--n", "12", "--k", "3",
                   "--trials", "4000", "--seed", "1", "--upper", "--upper-suite", "16") == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["beta_lower"] <= 1.6181
    assert payload["beta_upper"] is not None
    assert payload["beta_lower"] <= payload["beta_upper"] + 1e-9


def test_verify_known_suites(capsys):
    assert run_cli("verify", "lemmas-q-r") == 0
    assert run_cli("verify", "ht-constants") == 0
    capsys.readouterr()


def test_verify_unknown_suite(capsys):
    assert run_cli("verify", "no-such-suite") == 2
    assert "unknown suite" in capsys.readouterr().err


def test_ric_identity(capsys):
    assert run_cli("ric", "--op", "identity", "--n", "6", "--k", "1") == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["delta"] <= 1e-12
    assert payload["mode"] == "exact-enumeration"


def test_ric_matches_golden_value(capsys):
    assert run_cli("ric", "--op", "dense-gaussian", "--m", "6", "--n", "8",
                   "--k", "1", "--seed", "0") == 0
    payload = json.loads(capsys.readouterr().out)
    assert abs(payload["delta"] - GOLDEN_RIC_M6_N8_SEED0) <= 1e-9


def test_ric_monte_carlo_dominated(capsys):
    assert run_cli("ric", "--op", "dense-gaussian", "--m", "6", "--n", "8",
                   "--k", "1", "--seed", "0", "--monte-carlo", "--trials", "4000") == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["mode"] == "monte-carlo-lower"
    assert payload["delta"] <= GOLDEN_RIC_M6_N8_SEED0 + 1e-12


def test_ric_budget_exceeded_needs_monte_carlo_flag(capsys):
    assert run_cli("ric", "--op", "dense-gaussian", "--m", "10", "--n", "80", "--k", "8") == 2
    assert "ric_monte_carlo" in capsys.readouterr().err


def test_cli_outputs_are_deterministic(tmp_path, monkeypatch, capsys):
    payloads = []
    for run in ("first", "second"):
        workdir = tmp_path / run
        workdir.mkdir()
        monkeypatch.chdir(workdir)
        assert run_cli("recover", str(CONFIGS / "sparse-iht-small.toml")) == 0
        payloads.append(
            tuple(
                (workdir / "out" / f"sparse-iht-small{suffix}").read_bytes()
                for suffix in ("_trace.csv", "_diagnostics.csv", "_diagnostics.json")
            )
        )
    capsys.readouterr()
    assert payloads[0] == payloads[1]


def test_gpim_roundtrip(tmp_path):
    img = RngStream(80, 0).normal(12).reshape(3, 4)
    path = tmp_path / "x.gpim"
    write_gpim(path, img)
    back = read_gpim(path)
    assert np.array_equal(back, img)


def test_gpim_rejects_other_files(tmp_path):
    path = tmp_path / "not.gpim"
    path.write_bytes(b"nope")
    with pytest.raises(ValueError, match="GPIM"):
        read_gpim(path)


def test_pgm_import(tmp_path):
    path = tmp_path / "img.pgm"
    path.write_bytes(b"P5\n# comment\n4 2\n255\n" + bytes(range(8)))
    img = read_pgm(path)
    assert img.shape == (2, 4)
    assert abs(img[0, 1] - 1.0 / 255.0) <= 1e-12
    ascii_path = tmp_path / "img2.pgm"
    ascii_path.write_bytes(b"P2\n2 2\n10\n0 5 10 10\n")
    img2 = load_image(ascii_path)
    assert np.allclose(img2, [[0.0, 0.5], [1.0, 1.0]], atol=1e-12)


def test_psnr_peak_convention():
    ref = np.zeros(4)
    assert psnr(ref, ref) == float("inf")
    assert abs(psnr(np.full(4, 0.1), ref) - 20.0) <= 1e-9
