import itertools

import numpy as np
import pytest

from xferlab.errors import NumericError, ShapeError
from xferlab.numerics import Rng, hungarian, singular_values, svd


# ---------------------------------------------------------------- svd

def test_svd_identity():
    res = svd(np.eye(4))
    assert np.allclose(res.s, np.ones(4), atol=0)


def test_svd_diagonal_sorted_abs():
    res = svd(np.diag([3.0, -2.0]))
    assert np.allclose(res.s, [3.0, 2.0], atol=0)


def test_svd_residuals_random():
    m = Rng(13).normal((20, 12))
    res = svd(m)
    fro = np.linalg.norm(m)
    assert np.linalg.norm(res.reconstruction() - m) <= 1e-8 * max(1.0, fro)
    assert np.abs(res.u.T @ res.u - np.eye(12)).max() < 1e-10
    assert np.abs(res.v.T @ res.v - np.eye(12)).max() < 1e-10
    assert np.all(np.diff(res.s) <= 0) and np.all(res.s >= 0)


def test_svd_residuals_large():
    m = Rng(7).normal((512, 512))
    res = svd(m)
    fro = np.linalg.norm(m)
    assert np.linalg.norm(res.reconstruction() - m) <= 1e-8 * max(1.0, fro)
    assert np.abs(res.u.T @ res.u - np.eye(512)).max() < 1e-10


def test_svd_deterministic():
    m = Rng(5).normal((30, 10))
    a, b = svd(m), svd(m.copy())
    assert np.array_equal(a.u, b.u) and np.array_equal(a.s, b.s)


def test_svd_rejects_bad_input():
    with pytest.raises(NumericError):
        svd(np.array([[1.0, np.nan]]))
    with pytest.raises(NumericError):
        svd(np.ones(3))
    assert singular_values(np.eye(2)).tolist() == [1.0, 1.0]


# ---------------------------------------------------------------- hungarian

def brute_force_cost(c):
    n = c.shape[0]
    return min(sum(c[i, p[i]] for i in range(n))
               for p in itertools.permutations(range(n)))


def test_hungarian_zero_diagonal():
    c = np.full((4, 4), 100.0)
    np.fill_diagonal(c, 0.0)
    a = hungarian(c)
    assert a.perm == (0, 1, 2, 3)
    assert a.total_cost == 0.0


def test_hungarian_two_by_two():
    a = hungarian(np.array([[1.0, 2.0], [3.0, 0.0]]))
    assert a.perm == (0, 1)
    assert a.total_cost == 1.0


def test_hungarian_matches_brute_force():
    rng = Rng(11)
    for n in range(1, 7):
        for _ in range(40):
            c = rng.normal((n, n))
            got = hungarian(c)
            assert got.total_cost == pytest.approx(brute_force_cost(c), abs=1e-12)
            assert sorted(got.perm) == list(range(n))
            assert got.total_cost == pytest.approx(
                sum(c[i, got.perm[i]] for i in range(n)), abs=0)


def test_hungarian_errors():
    with pytest.raises(ShapeError):
        hungarian(np.ones((2, 3)))
    with pytest.raises(ShapeError):
        hungarian(np.ones((0, 0)))
    with pytest.raises(NumericError):
        hungarian(np.array([[np.inf]]))
