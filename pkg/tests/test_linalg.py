import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_psd
from dppkit.linalg import SchurFactor, det_psd, is_symmetric, jacobi_eigh, logdet_psd


def test_jacobi_matches_lapack(rng):
    for n in (1, 2, 5, 17):
        A = random_psd(rng, n) - 0.3 * np.eye(n)
        w, v = jacobi_eigh(A)
        np.testing.assert_allclose(w, np.linalg.eigvalsh(A), atol=1e-10)
        np.testing.assert_allclose(v @ np.diag(w) @ v.T, A, atol=1e-8)
        np.testing.assert_allclose(v.T @ v, np.eye(n), atol=1e-10)


def test_jacobi_two_by_two_closed_form():
    w, _ = jacobi_eigh(np.array([[1.0, 0.5], [0.5, 1.0]]))
    np.testing.assert_allclose(w, [0.5, 1.5], atol=1e-14)


def test_jacobi_empty_and_diagonal():
    w, v = jacobi_eigh(np.zeros((0, 0)))
    assert w.shape == (0,) and v.shape == (0, 0)
    w, v = jacobi_eigh(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_allclose(w, [1.0, 2.0, 3.0])


@given(st.integers(1, 7), st.integers(0, 2**32 - 1))
def test_logdet_matches_slogdet(n, seed):
    L = random_psd(np.random.default_rng(seed), n) + 1e-3 * np.eye(n)
    sign, ld = np.linalg.slogdet(L)
    assert sign > 0
    assert logdet_psd(L) == pytest.approx(ld, rel=1e-10, abs=1e-10)


def test_logdet_conventions():
    assert logdet_psd(np.zeros((0, 0))) == 0.0
    assert logdet_psd(np.ones((2, 2))) == -math.inf
    assert det_psd(np.array([[2.0, 1.0], [1.0, 2.0]])) == pytest.approx(3.0)
    # rank deficient Gram block of a rank-2 matrix
    rng = np.random.default_rng(0)
    assert logdet_psd(random_psd(rng, 4, rank=2)) == -math.inf


def test_is_symmetric_tolerance():
    A = np.eye(3)
    A[0, 1] = 1e-10
    assert is_symmetric(A)
    A[0, 1] = 1e-8
    assert not is_symmetric(A)


def test_schur_factor_tracks_determinants(rng):
    L = random_psd(rng, 8) + 0.05 * np.eye(8)
    f = SchurFactor(L)
    Y = []
    for j in (3, 0, 6, 1):
        s_before = f.schur()[j]
        f.add(j)
        Y.append(j)
        ld = np.linalg.slogdet(L[np.ix_(Y, Y)])[1]
        assert f.logdet == pytest.approx(ld, rel=1e-10)
        # the Schur complement is the ratio of successive determinants
        if len(Y) > 1:
            prev = np.linalg.slogdet(L[np.ix_(Y[:-1], Y[:-1])])[1]
            assert math.log(s_before) == pytest.approx(ld - prev, rel=1e-9, abs=1e-12)


def test_schur_factor_rejects_singular_pivot():
    f = SchurFactor(np.ones((2, 2)))
    f.add(0)
    with pytest.raises(np.linalg.LinAlgError):
        f.add(1)
