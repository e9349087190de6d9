"""Small dense symmetric linear algebra used throughout the package.

Everything here works on plain ``numpy`` arrays.  The routines are written for
the kernel sizes the DPP code deals with (a handful up to a few thousand
items), favouring robustness over raw speed.
"""
from __future__ import annotations

import math

import numpy as np

__all__ = [
    "jacobi_eigh",
    "logdet_psd",
    "det_psd",
    "SchurFactor",
    "is_symmetric",
]

SYM_TOL = 1e-9
PIVOT_TOL = 1e-12


def is_symmetric(a: np.ndarray, tol: float = SYM_TOL) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and bool(np.all(np.abs(a - a.T) <= tol))


def jacobi_eigh(a, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigendecomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Iterates full sweeps over the strict upper triangle until the Frobenius
    norm of the off-diagonal part drops below ``tol`` (scaled by the matrix
    norm when that exceeds one).

    Returns
    -------
    w : ndarray, shape (n,)
        Eigenvalues in ascending order.
    v : ndarray, shape (n, n)
        Orthonormal eigenvectors, ``v[:, k]`` pairs with ``w[k]``.
    """
    a = np.array(a, dtype=float, copy=True)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    if n <= 1:
        return np.diag(a).copy(), v

    scale = max(1.0, float(np.linalg.norm(a)))
    threshold = tol * scale
    iu = np.triu_indices(n, 1)
    for _ in range(max_sweeps):
        off = math.sqrt(2.0 * float(np.sum(a[iu] ** 2)))
        if off < threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                # Rutishauser's stable choice of the rotation angle
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise RuntimeError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")

    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def logdet_psd(a, pivot_tol: float = PIVOT_TOL) -> float:
    """Log-determinant of a symmetric PSD matrix via symmetrically pivoted Cholesky.

    A pivot falling below ``pivot_tol`` times the largest diagonal entry means
    the matrix is (numerically) singular and ``-inf`` is returned.  The empty
    matrix has determinant one.
    """
    a = np.array(a, dtype=float, copy=True)
    n = a.shape[0]
    if n == 0:
        return 0.0
    diag_max = float(np.max(np.diag(a)))
    if not diag_max > 0.0:
        return -math.inf
    floor = pivot_tol * diag_max
    total = 0.0
    for j in range(n):
        sub = a[j:, j:]
        k = j + int(np.argmax(np.diag(sub)))
        pivot = a[k, k]
        if not pivot >= floor or pivot <= 0.0:
            return -math.inf
        if k != j:
            a[[j, k], :] = a[[k, j], :]
            a[:, [j, k]] = a[:, [k, j]]
        total += math.log(pivot)
        if j + 1 < n:
            col = a[j + 1:, j] / math.sqrt(pivot)
            a[j + 1:, j + 1:] -= np.outer(col, col)
    return total


def det_psd(a) -> float:
    ld = logdet_psd(a)
    return 0.0 if ld == -math.inf else math.exp(ld)


class SchurFactor:
    """Incrementally grown Cholesky factor of a principal block ``L_Y``.

    Keeps, for every item ``i`` of the ground set, the projection
    ``e_i = C^{-1} L_{Y,i}`` where ``C C^T = L_Y``.  The Schur complement of a
    candidate is then ``L_ii - |e_i|^2``, i.e. ``det(L_{Y+i}) / det(L_Y)``.
    """

    def __init__(self, L: np.ndarray):
        self.L = np.asarray(L, dtype=float)
        self.n = self.L.shape[0]
        self.rows = np.zeros((0, self.n))
        self.diag = np.diag(self.L).copy()
        self.chosen: list[int] = []
        self.logdet = 0.0

    def schur(self) -> np.ndarray:
        """Schur complements ``s_i`` for every item (meaningless for chosen ones)."""
        return self.diag - np.sum(self.rows ** 2, axis=0)

    def add(self, j: int) -> float:
        """Append item ``j``; returns its Schur complement before insertion."""
        s = float(self.diag[j] - np.dot(self.rows[:, j], self.rows[:, j]))
        if s <= 0.0:
            raise np.linalg.LinAlgError(f"item {j} makes the selected block singular (schur={s:.3e})")
        d = math.sqrt(s)
        new_row = (self.L[j, :] - self.rows[:, j] @ self.rows) / d
        self.rows = np.vstack([self.rows, new_row])
        self.chosen.append(j)
        self.logdet += math.log(s)
        return s
