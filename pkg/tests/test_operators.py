import numpy as np
import pytest

from gpgd.models import LowRank, SparseK
from gpgd.operators import (
    CircularBlurOp,
    DenseOp,
    MaskOp,
    adjoint_test,
    gaussian_dense,
    gaussian_kernel,
    optimal_scale,
    random_mask,
    restricted_spectrum_scale,
    ric_exact_sparse,
    ric_monte_carlo,
    rip_check,
)
from gpgd.rng import RngStream


def test_mask_keeping_everything_is_identity():
    op = MaskOp(np.arange(8), 8)
    x = RngStream(1, 0).normal(8)
    assert np.array_equal(op.apply(x), x)
    assert np.array_equal(op.adjoint(op.apply(x)), x)


def test_blur_unit_kernel_is_identity():
    op = CircularBlurOp(np.array([1.0]), 8)
    x = RngStream(1, 1).normal(8)
    assert np.allclose(op.apply(x), x, atol=1e-15)


def test_adjoint_identity_on_probes():
    ops = [
        gaussian_dense(6, 10, RngStream(2, 0)),
        random_mask(12, 0.3, RngStream(2, 1)),
        CircularBlurOp(gaussian_kernel(1.0), 16),
        CircularBlurOp(gaussian_kernel(1.5), (4, 8)),
    ]
    for i, op in enumerate(ops):
        assert adjoint_test(op, RngStream(3, i)) <= 1e-10


def test_gaussian_kernel_shape():
    assert gaussian_kernel(1.0).size == 7
    assert gaussian_kernel(3.0).size == 19
    assert abs(gaussian_kernel(2.0).sum() - 1.0) <= 1e-12


def test_blur_commutes_with_shifts():
    op = CircularBlurOp(gaussian_kernel(1.0), 16)
    x = RngStream(4, 0).normal(16)
    assert np.linalg.norm(op.apply(np.roll(x, 5)) - np.roll(op.apply(x), 5)) <= 1e-10


def test_mask_gram_is_zero_one_diagonal():
    op = random_mask(10, 0.3, RngStream(5, 0))
    probe = np.eye(10)
    gram = np.stack([op.gram_apply(col) for col in probe])
    assert np.allclose(gram, np.diag(np.diag(gram)), atol=1e-15)
    assert set(np.round(np.diag(gram), 12).tolist()) <= {0.0, 1.0}


def test_exact_ric_identity_operator():
    rep = ric_exact_sparse(DenseOp(np.eye(6)), 1.0, 2)
    assert rep.delta <= 1e-12


def test_exact_ric_scaled_identity():
    rep = ric_exact_sparse(DenseOp(np.sqrt(2.0) * np.eye(6)), 1.0, 2)
    assert abs(rep.delta - 1.0) <= 1e-12


def test_exact_ric_witness_reproduces_delta():
    op = gaussian_dense(6, 8, RngStream(10, 0))
    rep = ric_exact_sparse(op, 1.0, 2)
    w = rep.witness
    direct = np.linalg.norm(w - rep.mu * op.gram_apply(w)) / np.linalg.norm(w)
    assert abs(direct - rep.delta) <= 1e-9


def test_monte_carlo_never_beats_exact():
    for seed in range(3):
        op = gaussian_dense(6, 8, RngStream(20 + seed, 0))
        exact = ric_exact_sparse(op, 1.0, 2)
        mc = ric_monte_carlo(op, SparseK(8, 1), 1.0, RngStream(30 + seed, 0), 3000)
        assert mc.delta <= exact.delta + 1e-12
        assert exact.delta - mc.delta <= 0.05  # the sampler does find the extremes


def test_monte_carlo_identity_and_determinism():
    ident = DenseOp(np.eye(6))
    rep = ric_monte_carlo(ident, SparseK(6, 1), 1.0, RngStream(7, 0), 200)
    assert rep.delta <= 1e-12
    op = gaussian_dense(8, 16, RngStream(8, 0))
    model = LowRank(4, 4, 1)
    a = ric_monte_carlo(op, model, 1.0, RngStream(9, 0), 200).delta
    b = ric_monte_carlo(op, model, 1.0, RngStream(9, 0), 200).delta
    assert np.isfinite(a) and a == b


def test_enumeration_budget_error_points_to_monte_carlo():
    op = gaussian_dense(10, 64, RngStream(11, 0))
    with pytest.raises(ValueError, match="ric_monte_carlo"):
        ric_exact_sparse(op, 1.0, 6)


def test_optimal_scale_undoes_scaling():
    q, _ = np.linalg.qr(RngStream(12, 0).normal(36).reshape(6, 6))
    mu, delta = optimal_scale(DenseOp(3.0 * q), SparseK(6, 1), exact=True)
    assert abs(mu - 1.0 / 9.0) <= 1e-6
    assert delta <= 1e-6


def test_optimal_scale_matches_closed_form_on_diagonal_gram():
    q, _ = np.linalg.qr(RngStream(13, 0).normal(36).reshape(6, 6))
    d = np.array([0.8, 1.0, 1.3, 0.9, 1.1, 0.7])
    op = DenseOp(q @ np.diag(d))
    mu_gs, _ = optimal_scale(op, SparseK(6, 2), exact=True)
    mu_cf, lmin, lmax = restricted_spectrum_scale(op, 4)
    assert abs(mu_cf - 2.0 / (d.min() ** 2 + d.max() ** 2)) <= 1e-12
    assert abs(mu_gs - mu_cf) <= 1e-6


def test_optimal_scale_dominates_unit_step():
    for seed in range(3):
        op = gaussian_dense(8, 12, RngStream(40 + seed, 0))
        model = SparseK(12, 1)
        mu, delta = optimal_scale(op, model, exact=True)
        at_one = ric_exact_sparse(op, 1.0, 2).delta
        assert delta <= at_one + 1e-12
        # the closed-form scaling cannot beat the true optimum either
        mu_cf, _, _ = restricted_spectrum_scale(op, 2)
        assert delta <= ric_exact_sparse(op, mu_cf, 2).delta + 1e-9


def test_delta_approaches_one_as_mu_vanishes():
    op = gaussian_dense(6, 8, RngStream(14, 0))
    rep = ric_exact_sparse(op, 1e-8, 2)
    assert 1.0 - 1e-6 <= rep.delta <= 1.0


def test_rip_two_sided_inequality():
    ident = DenseOp(np.eye(6))
    assert rip_check(ident, SparseK(6, 1), 1.0, RngStream(15, 0), 100, delta=0.0)
    op = gaussian_dense(6, 8, RngStream(16, 0))
    exact = ric_exact_sparse(op, 0.4, 2)
    assert rip_check(op, SparseK(8, 1), 0.4, RngStream(17, 0), 500, delta=exact.delta)


def test_monte_carlo_optimal_scale_runs():
    op = gaussian_dense(8, 16, RngStream(18, 0))
    model = LowRank(4, 4, 1)
    mu, delta = optimal_scale(op, model, exact=False, rng=RngStream(19, 0), trials=300)
    assert mu > 0.0 and np.isfinite(delta)


def test_mask_rejects_bad_indices():
    with pytest.raises(ValueError):
        MaskOp(np.array([0, 0, 1]), 4)
    with pytest.raises(ValueError):
        MaskOp(np.array([5]), 4)


def test_blur_rejects_even_kernel():
    with pytest.raises(ValueError, match="odd"):
        CircularBlurOp(np.ones(4) / 4.0, 8)
