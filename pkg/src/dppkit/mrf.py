"""Three-item DPPs versus pairwise repulsive MRFs.

Both models are written as unnormalized node potentials times one ternary
factor; only the ternary factor differs.  This module tabulates those factors,
checks the DPP's transitivity constraint, scans the realizable factor
manifolds slice by slice, and builds exact two-item fits of either model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CONFIGS",
    "TernaryFactorTable",
    "MrfParams",
    "DppParams3",
    "mrf_factor_table",
    "dpp_factor_table",
    "triangle_feasible",
    "is_psd_unit3",
    "manifold_slice",
    "fit_mrf_pair",
    "fit_lensemble_pair",
    "pair_distribution_mrf",
    "pair_distribution_lensemble",
]

CONFIGS = ("000", "001", "010", "100", "110", "101", "011", "111")
SLICE_TOL = 1e-3


@dataclass(frozen=True)
class TernaryFactorTable:
    values: dict

    def __post_init__(self):
        if set(self.values) != set(CONFIGS):
            raise ValueError(f"factor table needs exactly the keys {CONFIGS}")
        for key in ("000", "001", "010", "100"):
            if self.values[key] != 1.0:
                raise ValueError(f"entry {key} must be 1, got {self.values[key]}")
        if any(v < 0 for v in self.values.values()):
            raise ValueError("factor entries must be nonnegative")

    def __getitem__(self, key: str) -> float:
        return self.values[key]

    def pair_entries(self) -> tuple[float, float, float, float]:
        """The four entries that carry information: 110, 101, 011, 111."""
        return tuple(self.values[k] for k in ("110", "101", "011", "111"))


@dataclass(frozen=True)
class MrfParams:
    w1: float = 0.0
    w2: float = 0.0
    w3: float = 0.0
    w12: float = 0.0
    w13: float = 0.0
    w23: float = 0.0

    def __post_init__(self):
        for name in ("w12", "w13", "w23"):
            if getattr(self, name) > 0:
                raise ValueError(f"pairwise weight {name}={getattr(self, name)} must be <= 0")


@dataclass(frozen=True)
class DppParams3:
    q1: float = 1.0
    q2: float = 1.0
    q3: float = 1.0
    s12: float = 0.0
    s13: float = 0.0
    s23: float = 0.0

    def __post_init__(self):
        if min(self.q1, self.q2, self.q3) <= 0:
            raise ValueError("qualities must be positive")
        S = self.similarity()
        w = np.linalg.eigvalsh(S)
        if w[0] < -1e-12:
            raise ValueError(f"similarity matrix is not PSD (eigenvalue {w[0]:.6g})")

    def similarity(self) -> np.ndarray:
        return np.array([
            [1.0, self.s12, self.s13],
            [self.s12, 1.0, self.s23],
            [self.s13, self.s23, 1.0],
        ])


def _table(v110, v101, v011, v111) -> TernaryFactorTable:
    values = dict.fromkeys(("000", "001", "010", "100"), 1.0)
    values.update({"110": v110, "101": v101, "011": v011, "111": v111})
    return TernaryFactorTable(values)


def mrf_factor_table(p: MrfParams) -> TernaryFactorTable:
    """``exp(sum_{i<j} w_ij y_i y_j)`` for every configuration."""
    return _table(
        math.exp(p.w12),
        math.exp(p.w13),
        math.exp(p.w23),
        math.exp(p.w12 + p.w13 + p.w23),
    )


def dpp_factor_table(p: DppParams3) -> TernaryFactorTable:
    """``det(S_Y)`` for every configuration; independent of the qualities."""
    a, b, c = p.s12, p.s13, p.s23
    # a PSD S can still give -1e-17 style rounding on singular minors
    return _table(
        max(1.0 - a * a, 0.0),
        max(1.0 - b * b, 0.0),
        max(1.0 - c * c, 0.0),
        max(1.0 + 2.0 * a * b * c - a * a - b * b - c * c, 0.0),
    )


def triangle_feasible(s12: float, s13: float, s23: float, tol: float = 1e-12) -> bool:
    """Triangle inequality on ``sqrt(1 - S^2)`` in all three rotations."""
    d12 = math.sqrt(max(0.0, 1.0 - s12 * s12))
    d13 = math.sqrt(max(0.0, 1.0 - s13 * s13))
    d23 = math.sqrt(max(0.0, 1.0 - s23 * s23))
    return d12 + d23 >= d13 - tol and d12 + d13 >= d23 - tol and d13 + d23 >= d12 - tol


def is_psd_unit3(s12: float, s13: float, s23: float, tol: float = 1e-12) -> bool:
    S = np.array([[1.0, s12, s13], [s12, 1.0, s23], [s13, s23, 1.0]])
    return bool(np.linalg.eigvalsh(S)[0] >= -tol)


def _grid(lo: float, hi: float, res: int) -> np.ndarray:
    g = np.linspace(lo, hi, res)
    if lo < 0.0 < hi:
        g = np.union1d(g, [0.0])
    return g


def manifold_slice(kind: str, v111: float, resolution: int = 100, tol: float = SLICE_TOL) -> np.ndarray:
    """Realizable ``(psi110, psi101, psi011)`` triples with ``psi111`` pinned near ``v111``.

    MRF: ``w12, w13`` scan ``[log v111, 0]`` and ``w23`` closes the sum to
    ``log v111``.  DPP: ``S12, S13`` scan ``[-1, 1]`` and ``S23`` solves the
    111 determinant equation (both roots, kept when inside ``[-1, 1]``).
    Grid points with no real root are not on the slice.  ``tol`` filters
    the recomputed 111 entry, guarding against rounding.  Rows come out in
    grid order, duplicates removed.
    """
    if not 0.0 < v111 <= 1.0:
        raise ValueError(f"v111 must lie in (0, 1], got {v111}")
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    if kind == "mrf":
        lv = math.log(v111)
        g = _grid(lv, 0.0, resolution)
        w12, w13 = np.meshgrid(g, g, indexing="ij")
        w12, w13 = w12.ravel(), w13.ravel()
        w23 = lv - w12 - w13
        ok = w23 <= 0.0
        pts = np.column_stack([np.exp(w12[ok]), np.exp(w13[ok]), np.exp(w23[ok])])
    elif kind == "dpp":
        g = _grid(-1.0, 1.0, resolution)
        a, b = np.meshgrid(g, g, indexing="ij")
        a, b = a.ravel(), b.ravel()
        room = (1.0 - a * a) * (1.0 - b * b)
        disc = room - v111
        rows = []
        real = disc >= 0.0
        r = np.sqrt(np.where(real, disc, 0.0))
        for sign in (-1.0, 1.0):
            c = a * b + sign * r
            keep = real & (np.abs(c) <= 1.0)
            rows.append(np.column_stack([a[keep], b[keep], c[keep], np.flatnonzero(keep), np.full(keep.sum(), sign)]))
        allrows = np.vstack(rows)
        allrows = allrows[np.lexsort((allrows[:, 4], allrows[:, 3]))]
        s = allrows[:, :3]
        det = 1.0 + 2.0 * s[:, 0] * s[:, 1] * s[:, 2] - np.sum(s * s, axis=1)
        s = s[np.abs(det - v111) <= tol]
        pts = 1.0 - s * s
    else:
        raise ValueError(f"kind must be 'mrf' or 'dpp', got {kind!r}")
    _, first = np.unique(np.round(pts, 12), axis=0, return_index=True)
    return pts[np.sort(first)]


def fit_mrf_pair(p00: float, p10: float, p01: float, p11: float) -> tuple[float, float, float]:
    """Exact ``(w1, w2, w12)`` reproducing a positive two-item distribution.

    Requires negative (or zero) correlation, i.e. ``w12 <= 0``.
    """
    w1 = math.log(p10 / p00)
    w2 = math.log(p01 / p00)
    w12 = math.log(p11 * p00 / (p10 * p01))
    if w12 > 1e-12:
        raise ValueError("distribution is positively correlated; no repulsive MRF fits it")
    return w1, w2, min(w12, 0.0)


def fit_lensemble_pair(p00: float, p10: float, p01: float, p11: float) -> np.ndarray:
    """A 2x2 L-ensemble kernel reproducing a positive two-item distribution."""
    l11 = p10 / p00
    l22 = p01 / p00
    off2 = l11 * l22 - p11 / p00
    if off2 < -1e-12:
        raise ValueError("distribution is positively correlated; no L-ensemble fits it")
    off = math.sqrt(max(off2, 0.0))
    return np.array([[l11, off], [off, l22]])


def pair_distribution_mrf(w1: float, w2: float, w12: float) -> np.ndarray:
    """``(P00, P10, P01, P11)`` of the two-item pairwise MRF."""
    u = np.array([1.0, math.exp(w1), math.exp(w2), math.exp(w1 + w2 + w12)])
    return u / u.sum()


def pair_distribution_lensemble(L) -> np.ndarray:
    L = np.asarray(L, dtype=float)
    u = np.array([1.0, L[0, 0], L[1, 1], L[0, 0] * L[1, 1] - L[0, 1] * L[1, 0]])
    return u / np.linalg.det(L + np.eye(2))
