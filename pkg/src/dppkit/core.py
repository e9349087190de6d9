"""Exact L-ensemble and marginal-kernel computations on explicit matrices."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .linalg import SYM_TOL, jacobi_eigh, logdet_psd

__all__ = [
    "PSDClampWarning",
    "NotPSDError",
    "SymmetricKernel",
    "QPhiDecomposition",
    "as_kernel",
    "as_subset",
    "build_l",
    "log_normalizer",
    "log_prob",
    "marginal_kernel",
    "l_from_k",
    "marginal_prob",
    "conditional_prob",
    "similarity_of",
]

EIG_TOL = 1e-9
EIG_METHODS = ("lapack", "jacobi")


class PSDClampWarning(RuntimeWarning):
    """Slightly negative eigenvalues (rounding noise) were clamped to zero."""


class NotPSDError(ValueError):
    pass


class SymmetricKernel:
    """A real symmetric matrix with a lazily computed, cached eigendecomposition.

    The same class serves as an L-ensemble kernel, a marginal kernel and a
    similarity matrix; the role is only checked by the functions consuming it.

    ``eig_method`` picks the eigensolver: ``"lapack"`` (``numpy.linalg.eigh``)
    or ``"jacobi"`` (the cyclic Jacobi routine in :mod:`dppkit.linalg`).
    """

    __slots__ = ("matrix", "eig_method", "_eig")

    def __init__(self, matrix, eig_method: str = "lapack", check: bool = True):
        m = np.array(matrix, dtype=float)
        if m.ndim == 0:
            m = m.reshape(1, 1)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"kernel must be square, got shape {m.shape}")
        if check:
            if not np.all(np.isfinite(m)):
                raise ValueError("kernel has non-finite entries")
            asym = float(np.max(np.abs(m - m.T))) if m.size else 0.0
            if asym > SYM_TOL:
                raise ValueError(f"kernel is not symmetric (max asymmetry {asym:.3e})")
        if eig_method not in EIG_METHODS:
            raise ValueError(f"unknown eig_method {eig_method!r}")
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        self.matrix = m
        self.eig_method = eig_method
        self._eig = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def __repr__(self):
        return f"SymmetricKernel(n={self.n})"

    @property
    def eig(self):
        """``(eigenvalues, eigenvectors)``, ascending; computed once."""
        # A racing second computation yields the same result, so no lock.
        if self._eig is None:
            if self.eig_method == "jacobi":
                w, v = jacobi_eigh(self.matrix)
            else:
                w, v = np.linalg.eigh(self.matrix)
            w.setflags(write=False)
            v.setflags(write=False)
            self._eig = (w, v)
        return self._eig

    def psd_eigenvalues(self, upper: float | None = None) -> np.ndarray:
        """Eigenvalues with rounding noise in ``[-1e-9, 0)`` clamped to zero.

        Raises :class:`NotPSDError` for anything more negative, or above
        ``upper + 1e-9`` when an upper bound is given.
        """
        w = self.eig[0]
        if w.size == 0:
            return w.copy()
        if w[0] < -EIG_TOL:
            raise NotPSDError(f"kernel is not PSD: eigenvalue {w[0]:.6g}")
        if upper is not None and w[-1] > upper + EIG_TOL:
            raise NotPSDError(f"eigenvalue {w[-1]:.6g} exceeds {upper}")
        if w[0] < 0.0:
            warnings.warn(f"clamping eigenvalue {w[0]:.3e} to zero", PSDClampWarning, stacklevel=3)
            w = np.maximum(w, 0.0)
        return np.array(w)

    def submatrix(self, idx: Sequence[int]) -> np.ndarray:
        idx = list(idx)
        return self.matrix[np.ix_(idx, idx)]


def as_kernel(obj) -> SymmetricKernel:
    return obj if isinstance(obj, SymmetricKernel) else SymmetricKernel(obj)


def as_subset(indices: Iterable[int], n: int | None = None) -> tuple[int, ...]:
    """Validate and canonicalise a subset: sorted, duplicate free, within ``[0, n)``."""
    out = []
    for i in indices:
        if isinstance(i, (bool, np.bool_)) or int(i) != i:
            raise ValueError(f"subset index {i!r} is not an integer")
        out.append(int(i))
    s = tuple(sorted(out))
    if len(set(s)) != len(s):
        raise ValueError(f"subset has duplicate indices: {s}")
    if s and (s[0] < 0 or (n is not None and s[-1] >= n)):
        raise ValueError(f"subset {s} out of range for n={n}")
    return s


@dataclass(frozen=True)
class QPhiDecomposition:
    """Per-item qualities ``q`` (positive) and unit-norm similarity vectors ``phi`` (rows)."""

    q: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float).reshape(-1)
        phi = np.asarray(self.phi, dtype=float)
        if phi.ndim == 1:
            phi = phi.reshape(-1, 1)
        if phi.shape[0] != q.shape[0]:
            raise ValueError(f"{q.shape[0]} qualities but {phi.shape[0]} similarity vectors")
        if np.any(~np.isfinite(q)) or np.any(q <= 0.0):
            raise ValueError("qualities must be finite and strictly positive")
        norms = np.linalg.norm(phi, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > 1e-9)
        if bad.size:
            raise ValueError(f"similarity vector {bad[0]} has norm {norms[bad[0]]:.12g}, expected 1")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "phi", phi)


def build_l(decomp: QPhiDecomposition, eig_method: str = "lapack") -> SymmetricKernel:
    """``L_ij = q_i q_j <phi_i, phi_j>``."""
    g = decomp.phi * decomp.q[:, None]
    return SymmetricKernel(g @ g.T, eig_method=eig_method)


def log_normalizer(L) -> float:
    """``log det(L + I) = sum_k log(1 + lambda_k)``."""
    L = as_kernel(L)
    return float(np.sum(np.log1p(L.psd_eigenvalues())))


def log_prob(L, Y) -> float:
    """Log-probability of drawing exactly ``Y``; ``-inf`` when ``det(L_Y)`` vanishes."""
    L = as_kernel(L)
    Y = as_subset(Y, L.n)
    return logdet_psd(L.submatrix(Y)) - log_normalizer(L)


def marginal_kernel(L, method: str = "eig") -> SymmetricKernel:
    """Marginal kernel ``K = L (L + I)^{-1}``.

    ``method="eig"`` rescales eigenvalues to ``lambda / (1 + lambda)``;
    ``method="inverse"`` solves against ``L + I`` directly.
    """
    L = as_kernel(L)
    if method == "eig":
        w = L.psd_eigenvalues()
        v = L.eig[1]
        K = (v * (w / (1.0 + w))) @ v.T
    elif method == "inverse":
        L.psd_eigenvalues()
        K = np.linalg.solve(L.matrix + np.eye(L.n), L.matrix)
    else:
        raise ValueError(f"unknown method {method!r}")
    return SymmetricKernel(0.5 * (K + K.T), eig_method=L.eig_method)


def l_from_k(K) -> SymmetricKernel:
    """Inverse map ``L = K (I - K)^{-1}``; requires every eigenvalue of K below one."""
    K = as_kernel(K)
    w = K.psd_eigenvalues()
    if w.size and w[-1] >= 1.0 - EIG_TOL:
        raise np.linalg.LinAlgError(
            f"I - K is singular (eigenvalue {w[-1]:.12g}); the inverse does not exist"
        )
    v = K.eig[1]
    L = (v * (w / (1.0 - w))) @ v.T
    return SymmetricKernel(0.5 * (L + L.T), eig_method=K.eig_method)


def marginal_prob(K, A) -> float:
    """Inclusion probability ``P(A subset of Y) = det(K_A)``."""
    K = as_kernel(K)
    A = as_subset(A, K.n)
    if not A:
        return 1.0
    sub = K.submatrix(A)
    if len(A) == 1:
        return float(sub[0, 0])
    if len(A) == 2:
        return float(sub[0, 0] * sub[1, 1] - sub[0, 1] * sub[1, 0])
    ld = logdet_psd(sub)
    return 0.0 if ld == -math.inf else math.exp(ld)


def conditional_prob(L, A, B) -> float:
    """``P(Y = A u B | A subset of Y) = det(L_{A u B}) / det(L + I_{complement of A})``."""
    L = as_kernel(L)
    A = as_subset(A, L.n)
    B = as_subset(B, L.n)
    if set(A) & set(B):
        raise ValueError(f"A and B overlap: {sorted(set(A) & set(B))}")
    num = logdet_psd(L.submatrix(sorted(A + B)))
    shift = np.ones(L.n)
    shift[list(A)] = 0.0
    den = logdet_psd(L.matrix + np.diag(shift))
    if den == -math.inf:
        raise ZeroDivisionError(f"P({A} subset of Y) = 0; conditional undefined")
    return 0.0 if num == -math.inf else math.exp(num - den)


def similarity_of(L) -> SymmetricKernel:
    """Unit-diagonal similarity ``S_ij = L_ij / sqrt(L_ii L_jj)``."""
    L = as_kernel(L)
    d = np.diag(L.matrix)
    if np.any(d <= 0.0):
        i = int(np.flatnonzero(d <= 0.0)[0])
        raise ValueError(f"item {i} has zero quality (L_ii={d[i]}); similarity undefined")
    r = 1.0 / np.sqrt(d)
    S = L.matrix * np.outer(r, r)
    np.fill_diagonal(S, 1.0)
    return SymmetricKernel(S, eig_method=L.eig_method)
