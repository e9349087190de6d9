"""Exact sampling from an L-ensemble via its eigendecomposition.

Two phases per draw: keep each eigenvector independently with probability
``lambda / (1 + lambda)``, then pick items one at a time from the spanned
subspace, projecting out the chosen coordinate after each pick.  Draws that
keep the same number of eigenvectors are processed together as a batch.

Every draw consumes exactly ``2 n`` uniforms from the stream (``n`` for the
eigenvector coin flips, up to ``n`` for the item picks, the rest discarded),
so the sample sequence for a seed does not depend on how the draws are
requested: one ``sample_many(k)`` equals ``k`` calls to ``sample()``.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .core import as_kernel, as_subset

__all__ = ["SamplerState", "sample", "empirical_marginals", "orthonormalize_columns"]

DEGENERATE_NORM = 1e-12
BATCH_FLOATS = 1 << 22


def _project_out(Q, col, c):
    prev = Q[:, :, :c]
    coef = np.matmul(col[:, None, :], prev)
    return col - np.matmul(coef, prev.transpose(0, 2, 1))[:, 0, :]


def orthonormalize_columns(V: np.ndarray) -> np.ndarray:
    """Gram-Schmidt with a re-orthogonalization pass, over the last axis.

    Accepts ``(n, k)`` or a batch ``(b, n, k)``.  A column whose norm drops
    under ``1e-12`` gets one extra pass; if still degenerate a
    ``LinAlgError`` is raised.
    """
    Q = np.array(V, dtype=float, copy=True)
    single = Q.ndim == 2
    if single:
        Q = Q[None]
    for c in range(Q.shape[2]):
        col = Q[:, :, c]
        col = _project_out(Q, col, c)
        col = _project_out(Q, col, c)
        norm = np.linalg.norm(col, axis=1)
        weak = norm < DEGENERATE_NORM
        if np.any(weak):
            col[weak] = _project_out(Q[weak], col[weak], c)
            norm = np.linalg.norm(col, axis=1)
            if np.any(norm < DEGENERATE_NORM):
                raise np.linalg.LinAlgError(
                    f"degenerate direction in column {c} (norm {float(norm.min()):.3e})"
                )
        Q[:, :, c] = col / norm[:, None]
    return Q[0] if single else Q


def _phase_two(V: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Item selection for a batch ``V`` of shape (b, n, k) driven by uniforms ``U`` (b, >= k)."""
    b, n, k = V.shape
    rows = np.arange(b)
    picks = np.empty((b, k), dtype=np.int64)
    for step in range(k):
        p = np.sum(V * V, axis=2)
        c = np.cumsum(p, axis=1)
        u = U[:, step] * c[:, -1]
        i = np.minimum(np.sum(c <= u[:, None], axis=1), n - 1)
        picks[:, step] = i
        if step == k - 1:
            break
        # eliminate e_i using the column with the largest |V[i, j]|
        row = V[rows, i, :]
        j = np.argmax(np.abs(row), axis=1)
        pivot = row[rows, j]
        V = V - V[rows, :, j][:, :, None] * (row / pivot[:, None])[:, None, :]
        V[rows, i, :] = 0.0
        m = V.shape[2] - 1
        keep = np.arange(m)[None, :]
        keep = keep + (keep >= j[:, None])
        V = np.take_along_axis(V, keep[:, None, :], axis=2)
        V = orthonormalize_columns(V)
    return picks


class SamplerState:
    """Eigendecomposition of L plus a seeded PCG64 stream (period 2**128).

    Not thread-safe; give each worker its own state and seed.
    """

    def __init__(self, L, seed: int = 0):
        if not 0 <= int(seed) < 2 ** 64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.kernel = as_kernel(L)
        self.seed = int(seed)
        self.rng = np.random.Generator(np.random.PCG64(self.seed))
        lam = self.kernel.psd_eigenvalues()
        self.eigvals = lam
        self.eigvecs = np.array(self.kernel.eig[1])
        self.keep_prob = lam / (1.0 + lam)

    @property
    def n(self) -> int:
        return self.kernel.n

    def sample(self) -> tuple[int, ...]:
        return self.sample_many(1)[0]

    def sample_many(self, count: int) -> list[tuple[int, ...]]:
        n = self.n
        out: list[tuple[int, ...]] = []
        chunk = max(1, BATCH_FLOATS // max(1, n * n))
        done = 0
        while done < count:
            size = min(chunk, count - done)
            out.extend(self._draw_chunk(size))
            done += size
        return out

    def _draw_chunk(self, size: int) -> list[tuple[int, ...]]:
        n = self.n
        U = self.rng.random((size, 2 * n))
        keep = U[:, :n] < self.keep_prob[None, :]
        result: list[tuple[int, ...]] = [()] * size
        if n == 0:
            return result
        sizes = keep.sum(axis=1)
        vecs_t = self.eigvecs.T
        for k in np.unique(sizes):
            k = int(k)
            if k == 0:
                continue
            members = np.flatnonzero(sizes == k)
            kept = np.nonzero(keep[members])[1].reshape(members.size, k)
            V = np.transpose(vecs_t[kept], (0, 2, 1))
            picks = _phase_two(V, U[members, n:])
            picks.sort(axis=1)
            for s, row in zip(members.tolist(), picks.tolist()):
                result[s] = tuple(row)
        return result


def sample(L, seed: int = 0, count: int = 1) -> list[tuple[int, ...]]:
    return SamplerState(L, seed).sample_many(count)


def empirical_marginals(samples: Sequence[Iterable[int]], n: int) -> np.ndarray:
    """Per-item inclusion frequencies over a nonempty sample sequence."""
    if len(samples) == 0:
        raise ValueError("need at least one sample")
    counts = np.zeros(n)
    for Y in samples:
        counts[list(as_subset(Y, n))] += 1.0
    return counts / len(samples)
