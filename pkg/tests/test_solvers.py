import numpy as np
import pytest

from gpgd.bridge import IdentityProjection, ModelProjection
from gpgd.certify import ht_beta_constant
from gpgd.models import SparseK
from gpgd.operators import DenseOp, gaussian_dense, optimal_scale
from gpgd.rng import RngStream
from gpgd.solvers import (
    DivergenceError,
    SolveConfig,
    SolveTrace,
    default_x0,
    gm_red,
    gpgd,
    landweber,
    oracle_sparse,
    pnp_pgm,
)


def well_conditioned_instance(seed=21, n=10, k=2):
    a = np.eye(n) + 0.05 * RngStream(seed, 0).normal(n * n).reshape(n, n)
    op = DenseOp(a)
    model = SparseK(n, k)
    mu, delta = optimal_scale(op, model, exact=True)
    xh = np.zeros(n)
    xh[[2, 7]] = [1.5, -0.8]
    return op, model, mu, delta, xh, op.apply(xh)


def test_identity_projection_whole_space_one_step():
    q, _ = np.linalg.qr(RngStream(20, 0).normal(64).reshape(8, 8))
    op = DenseOp(q)
    xh = RngStream(20, 1).normal(8)
    tr = gpgd(op, op.apply(xh), IdentityProjection(), SolveConfig(mu=1.0, max_iters=3),
              RngStream(20, 2).normal(8), target=xh)
    assert tr.errors_to_target[1] <= 1e-12


def test_contraction_under_the_certified_rate():
    op, model, mu, delta, xh, y = well_conditioned_instance()
    beta = ht_beta_constant()
    assert delta * beta < 1.0
    tr = gpgd(op, y, ModelProjection(model), SolveConfig(mu=mu, max_iters=200),
              RngStream(22, 0).normal(10), target=xh)
    errs = np.asarray(tr.errors_to_target)
    assert np.all(errs[1:] <= (delta * beta + 1e-9) * errs[:-1] + 1e-15)
    assert tr.converged


def test_limit_matches_the_exhaustive_oracle():
    op, model, mu, _, xh, y = well_conditioned_instance()
    tr = gpgd(op, y, ModelProjection(model), SolveConfig(mu=mu, max_iters=300),
              RngStream(23, 0).normal(10), target=xh)
    xo = oracle_sparse(op, y, model.k)
    assert np.linalg.norm(xo - tr.final) <= 1e-8


def test_oracle_full_support_is_least_squares():
    op = gaussian_dense(8, 5, RngStream(24, 0))
    y = RngStream(24, 1).normal(8)
    xo = oracle_sparse(op, y, 5)
    xls, *_ = np.linalg.lstsq(op.a, y, rcond=None)
    assert np.allclose(xo, xls, atol=1e-10)


def test_oracle_recovers_exactly_when_injective():
    op = gaussian_dense(6, 8, RngStream(25, 0))
    xh = np.zeros(8)
    xh[[1, 5]] = [2.0, -1.0]
    assert np.linalg.norm(oracle_sparse(op, op.apply(xh), 2) - xh) <= 1e-10


def test_oracle_objective_no_worse_than_solver(seed=26):
    op = gaussian_dense(8, 10, RngStream(seed, 0))
    model = SparseK(10, 2)
    mu, _ = optimal_scale(op, model, exact=True)
    xh = model.sample(RngStream(seed, 1))
    y = op.apply(xh)
    tr = gpgd(op, y, ModelProjection(model), SolveConfig(mu=mu, max_iters=300),
              np.zeros(10), target=xh)
    xo = oracle_sparse(op, y, 2)
    obj = lambda x: 0.5 * np.linalg.norm(op.apply(x) - y) ** 2
    assert obj(xo) <= obj(tr.final) + 1e-10


def test_oracle_budget_guard():
    op = gaussian_dense(10, 40, RngStream(27, 0))
    with pytest.raises(ValueError, match="budget"):
        oracle_sparse(op, np.zeros(10), 6)


def test_gpgd_matches_averaged_direction_form():
    op, model, mu, _, xh, y = well_conditioned_instance()
    proj = ModelProjection(model)
    cfg = SolveConfig(mu=mu, max_iters=30, stop_tol=0.0)
    x0 = RngStream(28, 0).normal(10)
    tr = gpgd(op, y, proj, cfg, x0, target=xh)
    x = x0.copy()
    for step in range(len(tr.iterates) - 1):
        g = x - proj.apply(x)
        x = x - mu * op.adjoint(op.apply(x) - y) - (g - mu * op.gram_apply(g))
        assert np.linalg.norm(x - tr.iterates[step + 1]) <= 1e-12 * (1.0 + np.linalg.norm(x))


def test_landweber_stays_at_zero():
    op = gaussian_dense(4, 6, RngStream(29, 0))
    tr = landweber(op, np.zeros(4), SolveConfig(mu=0.5, max_iters=10), np.zeros(6))
    assert all(np.linalg.norm(x) == 0.0 for x in tr.iterates)


def test_landweber_monotone_residual_and_pinv_limit():
    op = gaussian_dense(6, 10, RngStream(30, 0))
    y = op.apply(RngStream(30, 1).normal(10))
    mu = 1.0 / op.gram_norm_bound()
    tr = landweber(op, y, SolveConfig(mu=mu, max_iters=8000, stop_tol=1e-15), np.zeros(10))
    res = [np.linalg.norm(op.apply(x) - y) for x in tr.iterates]
    assert all(b <= a + 1e-12 for a, b in zip(res, res[1:]))
    assert np.linalg.norm(tr.final - np.linalg.pinv(op.a) @ y) <= 1e-10


def test_gm_red_zero_weight_and_identity_denoiser_reduce_to_landweber():
    op = gaussian_dense(6, 10, RngStream(31, 0))
    y = op.apply(RngStream(31, 1).normal(10))
    cfg = SolveConfig(mu=0.3, lam=0.0, max_iters=40, stop_tol=0.0)
    base = landweber(op, y, cfg, np.zeros(10))
    zero_lam = gm_red(op, y, ModelProjection(SparseK(10, 3)), cfg, np.zeros(10))
    ident = gm_red(op, y, IdentityProjection(),
                   SolveConfig(mu=0.3, lam=2.0, max_iters=40, stop_tol=0.0), np.zeros(10))
    for a, b, c in zip(base.iterates, zero_lam.iterates, ident.iterates):
        assert np.array_equal(a, b)
        assert np.array_equal(a, c)


def test_pnp_identity_denoiser_is_landweber():
    op = gaussian_dense(6, 10, RngStream(32, 0))
    y = op.apply(RngStream(32, 1).normal(10))
    cfg = SolveConfig(mu=0.3, max_iters=40, stop_tol=0.0)
    a = pnp_pgm(op, y, IdentityProjection(), cfg, np.zeros(10))
    b = landweber(op, y, cfg, np.zeros(10))
    assert all(np.array_equal(x, z) for x, z in zip(a.iterates, b.iterates))


def test_fixed_point_consistency_all_solvers():
    op, model, mu, _, xh, y = well_conditioned_instance()
    proj = ModelProjection(model)
    cfg = SolveConfig(mu=mu, lam=0.7, max_iters=10, stop_tol=0.0)
    for solver in (
        lambda: gpgd(op, y, proj, cfg, xh, target=xh),
        lambda: pnp_pgm(op, y, proj, cfg, xh, target=xh),
        lambda: gm_red(op, y, proj, cfg, xh, target=xh),
    ):
        tr = solver()
        assert max(tr.errors_to_target) <= 1e-12


def test_divergence_guard_keeps_partial_trace():
    op = gaussian_dense(6, 10, RngStream(33, 0))
    y = op.apply(RngStream(33, 1).normal(10))
    with pytest.raises(DivergenceError) as err:
        landweber(op, y, SolveConfig(mu=1e7, max_iters=100, stop_tol=0.0), np.ones(10))
    assert isinstance(err.value.trace, SolveTrace)
    assert len(err.value.trace.iterates) >= 1


def test_traces_are_deterministic():
    op, model, mu, _, xh, y = well_conditioned_instance()
    cfg = SolveConfig(mu=mu, max_iters=25, stop_tol=0.0)
    t1 = gpgd(op, y, ModelProjection(model), cfg, RngStream(34, 0).normal(10), target=xh)
    t2 = gpgd(op, y, ModelProjection(model), cfg, RngStream(34, 0).normal(10), target=xh)
    assert all(np.array_equal(a, b) for a, b in zip(t1.iterates, t2.iterates))


def test_projected_and_pnp_iterations_differ_by_half_a_step():
    # the projected points of the project-first iteration are exactly the
    # iterates of the gradient-first iteration started at the projection
    op, model, mu, _, xh, y = well_conditioned_instance()
    proj = ModelProjection(model)
    cfg = SolveConfig(mu=mu, max_iters=25, stop_tol=0.0)
    x0 = RngStream(36, 0).normal(10)
    a = gpgd(op, y, proj, cfg, x0, target=xh)
    b = pnp_pgm(op, y, proj, cfg, proj.apply(x0), target=xh)
    for p, w in zip(a.projected_points, b.iterates):
        assert np.linalg.norm(p - w) <= 1e-12 * (1.0 + np.linalg.norm(w))


def test_default_x0_mean_matched():
    op = gaussian_dense(6, 10, RngStream(35, 0))
    y = op.apply(RngStream(35, 1).normal(10))
    x0 = default_x0(op, y, RngStream(35, 2))
    assert abs(x0.mean() - op.adjoint(y).mean()) <= 1e-12


def test_config_validation():
    with pytest.raises(ValueError):
        SolveConfig(mu=0.0)
    with pytest.raises(ValueError):
        SolveConfig(mu=1.0, max_iters=0)
    with pytest.raises(ValueError):
        SolveConfig(mu=1.0, lam=-1.0)
