import itertools
import math
import threading

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import all_subsets, det_sub, enumerate_probs, random_psd
from dppkit import (
    NotPSDError,
    PSDClampWarning,
    QPhiDecomposition,
    SymmetricKernel,
    as_subset,
    build_l,
    conditional_prob,
    l_from_k,
    log_normalizer,
    log_prob,
    marginal_kernel,
    marginal_prob,
    similarity_of,
)

L2 = np.array([[2.0, 1.0], [1.0, 2.0]])
seeds = st.integers(0, 2**32 - 1)


# ---- SymmetricKernel / Subset ---------------------------------------------

def test_kernel_validation():
    with pytest.raises(ValueError):
        SymmetricKernel(np.ones((2, 3)))
    with pytest.raises(ValueError):
        SymmetricKernel([[1.0, 0.1], [0.0, 1.0]])
    with pytest.raises(ValueError):
        SymmetricKernel([[np.nan]])
    K = SymmetricKernel([[1.0, 1e-10], [0.0, 1.0]])
    assert K.matrix[0, 1] == K.matrix[1, 0]
    with pytest.raises(ValueError):
        K.matrix[0, 0] = 3.0


def test_cached_eig_reconstructs(rng):
    for method in ("lapack", "jacobi"):
        L = SymmetricKernel(random_psd(rng, 9), eig_method=method)
        w, v = L.eig
        assert L.eig is L.eig
        assert np.max(np.abs((v * w) @ v.T - L.matrix)) < 1e-8


def test_eig_cache_is_race_benign(rng):
    L = SymmetricKernel(random_psd(rng, 40))
    out = []
    threads = [threading.Thread(target=lambda: out.append(L.eig[0].copy())) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for w in out:
        np.testing.assert_array_equal(w, out[0])


def test_psd_clamp_and_reject():
    eps = np.diag([1.0, -5e-10])
    with pytest.warns(PSDClampWarning):
        assert log_normalizer(eps) == pytest.approx(math.log(2.0))
    with pytest.raises(NotPSDError):
        log_normalizer(np.diag([1.0, -1e-6]))


def test_subset_validation():
    assert as_subset([3, 1, 2], 4) == (1, 2, 3)
    assert as_subset([], 0) == ()
    for bad in ([1, 1], [-1], [4], [0.5]):
        with pytest.raises(ValueError):
            as_subset(bad, 4)


# ---- build_l ---------------------------------------------------------------

def test_build_l_examples():
    e1 = np.array([1.0, 0.0])
    e2 = np.array([0.0, 1.0])
    np.testing.assert_allclose(build_l(QPhiDecomposition([1, 1], [e1, e1])).matrix, np.ones((2, 2)))
    np.testing.assert_allclose(build_l(QPhiDecomposition([2, 1], [e1, e2])).matrix, np.diag([4.0, 1.0]))
    phi2 = np.array([0.5, math.sqrt(0.75)])
    L = build_l(QPhiDecomposition([1, 1], [e1, phi2]))
    np.testing.assert_allclose(L.matrix, [[1, 0.5], [0.5, 1]], atol=1e-15)
    # oracle: 2x2 eigenvalues 1 -+ 0.5 for a unit-diagonal matrix with off-diagonal 0.5
    np.testing.assert_allclose(L.eig[0], [0.5, 1.5], atol=1e-14)


def test_build_l_rejects_bad_inputs():
    with pytest.raises(ValueError):
        QPhiDecomposition([1.0], [[0.9]])
    with pytest.raises(ValueError):
        QPhiDecomposition([0.0], [[1.0]])
    with pytest.raises(ValueError):
        QPhiDecomposition([-1.0], [[1.0]])


@given(st.integers(1, 6), st.integers(1, 5), seeds)
def test_build_l_structure(n, d, seed):
    rng = np.random.default_rng(seed)
    phi = rng.normal(size=(n, d))
    phi /= np.linalg.norm(phi, axis=1, keepdims=True)
    q = rng.uniform(0.1, 3.0, size=n)
    L = build_l(QPhiDecomposition(q, phi))
    np.testing.assert_allclose(np.diag(L.matrix), q * q, rtol=1e-12)
    assert L.eig[0][0] > -1e-9


# ---- normalizer / probabilities -------------------------------------------

def test_log_normalizer_examples():
    assert log_normalizer(np.eye(2)) == pytest.approx(math.log(4.0))
    assert log_normalizer(np.zeros((3, 3))) == 0.0
    # enumeration oracle: 1 + 2 + 2 + 3
    assert log_normalizer(L2) == pytest.approx(math.log(8.0), rel=1e-14)


def test_log_prob_examples():
    assert log_prob(L2, [0, 1]) == pytest.approx(math.log(3 / 8), rel=1e-13)
    assert log_prob(L2, []) == pytest.approx(-log_normalizer(L2))
    dup = build_l(QPhiDecomposition([1, 1], [[1.0, 0.0], [1.0, 0.0]]))
    assert log_prob(dup, [0, 1]) == -math.inf


@given(st.integers(1, 8), seeds)
def test_normalization_by_enumeration(n, seed):
    L = random_psd(np.random.default_rng(seed), n)
    total = math.fsum(det_sub(L, Y) for Y in all_subsets(n))
    assert total == pytest.approx(math.exp(log_normalizer(L)), rel=1e-9)


@given(st.integers(1, 6), seeds)
def test_log_prob_matches_enumeration(n, seed):
    L = random_psd(np.random.default_rng(seed), n) + 1e-3 * np.eye(n)
    probs = enumerate_probs(L)
    for Y, p in probs.items():
        assert math.exp(log_prob(L, Y)) == pytest.approx(p, rel=1e-9, abs=1e-14)


@given(st.integers(1, 6), st.integers(1, 4), seeds)
def test_quality_diversity_factorization(n, d, seed):
    rng = np.random.default_rng(seed)
    phi = rng.normal(size=(n, d))
    phi /= np.linalg.norm(phi, axis=1, keepdims=True)
    q = rng.uniform(0.2, 2.0, size=n)
    L = build_l(QPhiDecomposition(q, phi))
    S = phi @ phi.T
    Y = [i for i in range(n) if rng.random() < 0.5]
    detS = det_sub(S, Y)
    if detS <= 1e-10:
        return
    expected = np.prod(q[Y] ** 2) * detS / math.exp(log_normalizer(L))
    assert math.exp(log_prob(L, Y)) == pytest.approx(expected, rel=1e-9)


# ---- marginal kernel -------------------------------------------------------

def test_marginal_kernel_examples():
    np.testing.assert_allclose(marginal_kernel(np.eye(3)).matrix, 0.5 * np.eye(3), atol=1e-15)
    np.testing.assert_allclose(marginal_kernel(np.diag([1.0, 3.0])).matrix, np.diag([0.5, 0.75]), atol=1e-15)


@given(st.integers(1, 7), seeds)
def test_marginal_kernel_matches_enumeration(n, seed):
    L = random_psd(np.random.default_rng(seed), n)
    K = marginal_kernel(L)
    probs = enumerate_probs(L)
    incl = [math.fsum(p for Y, p in probs.items() if i in Y) for i in range(n)]
    np.testing.assert_allclose(np.diag(K.matrix), incl, atol=1e-9)
    np.testing.assert_allclose(marginal_kernel(L, method="inverse").matrix, K.matrix, atol=1e-10)
    w = K.eig[0]
    assert w[0] > -1e-9 and w[-1] < 1.0


def test_marginal_kernel_jacobi_route(rng):
    L = random_psd(rng, 10)
    a = marginal_kernel(SymmetricKernel(L, eig_method="jacobi")).matrix
    b = marginal_kernel(SymmetricKernel(L, eig_method="lapack")).matrix
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_l_from_k():
    np.testing.assert_allclose(l_from_k(0.5 * np.eye(2)).matrix, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(l_from_k(np.diag([0.75])).matrix, [[3.0]], atol=1e-14)
    with pytest.raises(np.linalg.LinAlgError, match="inverse does not exist"):
        l_from_k(np.diag([1.0, 0.2]))


@given(st.integers(1, 8), seeds)
def test_l_k_round_trip(n, seed):
    L = random_psd(np.random.default_rng(seed), n)
    K = marginal_kernel(L)
    if K.eig[0][-1] >= 1 - 1e-9:
        return
    np.testing.assert_allclose(marginal_kernel(l_from_k(K)).matrix, K.matrix, atol=1e-8)


def test_marginal_prob_examples():
    K = np.array([[0.5, 0.25], [0.25, 0.5]])
    assert marginal_prob(K, []) == 1.0
    assert marginal_prob(K, [0, 1]) == pytest.approx(0.1875, abs=1e-15)
    assert marginal_prob(K, [1]) == 0.5


@given(st.integers(2, 7), seeds)
def test_negative_association_and_enumeration(n, seed):
    rng = np.random.default_rng(seed)
    L = random_psd(rng, n)
    K = marginal_kernel(L)
    probs = enumerate_probs(L)
    for i in range(n):
        for j in range(i + 1, n):
            pij = marginal_prob(K, [i, j])
            assert pij <= marginal_prob(K, [i]) * marginal_prob(K, [j]) + 1e-15
            both = math.fsum(p for Y, p in probs.items() if i in Y and j in Y)
            assert pij == pytest.approx(both, abs=1e-9)
    A = [k for k in range(n) if rng.random() < 0.5]
    inc = math.fsum(p for Y, p in probs.items() if set(A) <= set(Y))
    assert marginal_prob(K, A) == pytest.approx(inc, abs=1e-9)


# ---- conditionals ----------------------------------------------------------

def test_conditional_examples():
    assert conditional_prob(L2, [0], []) == pytest.approx(2 / 5, rel=1e-14)
    assert conditional_prob(L2, [0], [1]) == pytest.approx(3 / 5, rel=1e-14)
    assert conditional_prob(L2, [], [1]) == pytest.approx(math.exp(log_prob(L2, [1])), rel=1e-13)
    with pytest.raises(ValueError):
        conditional_prob(L2, [0], [0])


@given(st.integers(1, 7), seeds)
def test_conditional_completeness(n, seed):
    rng = np.random.default_rng(seed)
    L = random_psd(rng, n) + 1e-2 * np.eye(n)
    A = tuple(i for i in range(n) if rng.random() < 0.4)
    rest = [i for i in range(n) if i not in A]
    probs = enumerate_probs(L)
    pA = math.fsum(p for Y, p in probs.items() if set(A) <= set(Y))
    total = []
    for k in range(len(rest) + 1):
        for B in itertools.combinations(rest, k):
            c = conditional_prob(L, A, B)
            total.append(c)
            assert c == pytest.approx(probs[tuple(sorted(A + B))] / pA, rel=1e-8, abs=1e-12)
    assert math.fsum(total) == pytest.approx(1.0, abs=1e-8)


# ---- similarity ------------------------------------------------------------

def test_similarity_examples():
    np.testing.assert_allclose(similarity_of(np.diag([4.0, 9.0])).matrix, np.eye(2))
    np.testing.assert_allclose(similarity_of([[4.0, 2.0], [2.0, 4.0]]).matrix, [[1, 0.5], [0.5, 1]])
    with pytest.raises(ValueError):
        similarity_of(np.diag([1.0, 0.0]))


@given(st.integers(1, 7), seeds)
def test_similarity_round_trip(n, seed):
    L = random_psd(np.random.default_rng(seed), n) + 1e-3 * np.eye(n)
    S = similarity_of(L).matrix
    phi = np.linalg.cholesky(S)
    phi /= np.linalg.norm(phi, axis=1, keepdims=True)
    back = build_l(QPhiDecomposition(np.sqrt(np.diag(L)), phi)).matrix
    np.testing.assert_allclose(back, L, atol=1e-8)
