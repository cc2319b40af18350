import numpy as np
import pytest

from gpgd.rng import RngStream, sample_gaussian


def test_same_seed_stream_is_bit_identical():
    a = RngStream(123, 45).normal(512)
    b = RngStream(123, 45).normal(512)
    assert np.array_equal(a, b)


def test_distinct_streams_differ():
    a = RngStream(123, 1).normal(64)
    b = RngStream(123, 2).normal(64)
    assert not np.array_equal(a, b)


def test_batching_does_not_change_the_stream():
    whole = RngStream(9, 0).normal(11)
    r = RngStream(9, 0)
    pieces = np.concatenate([r.normal(3), r.normal(7), r.normal(1)])
    assert np.array_equal(whole, pieces)


def test_gaussian_moments():
    draws = sample_gaussian(RngStream(1, 0), 100_000)
    assert abs(draws.mean()) <= 0.02
    assert abs(draws.var() - 1.0) <= 0.03


def test_uniform_range():
    u = RngStream(4, 4).uniform(10_000)
    assert u.min() >= 0.0 and u.max() < 1.0


def test_thousand_streams_no_prefix_collision():
    prefixes = {RngStream(77, sid).normal(16).tobytes() for sid in range(1000)}
    assert len(prefixes) == 1000


def test_choice_distinct_indices():
    idx = RngStream(5, 0).choice(20, 7)
    assert len(set(idx.tolist())) == 7
    with pytest.raises(ValueError):
        RngStream(5, 0).choice(3, 4)


def test_sample_gaussian_needs_positive_count():
    with pytest.raises(ValueError):
        sample_gaussian(RngStream(0, 0), 0)
