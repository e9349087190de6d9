"""Sentence similarity vectors and quality features for summarization."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import Cluster, tokenize

__all__ = [
    "IdfTable",
    "FeatureConfig",
    "FEATURE_NAMES",
    "N_FEATURES",
    "build_idf",
    "tfidf_vectors",
    "cosine_matrix",
    "phi_features",
    "phi_matrix",
    "lexrank",
    "mean_cluster_similarity",
    "quantile_edges",
    "bin_index",
    "fit_bins",
    "quality_features",
]

GLOBAL_BINS = 5
LOCAL_SIM_BINS = 10
LOCAL_LEX_BINS = 5
POSITIONS = 5


def _names() -> tuple[str, ...]:
    names = ["constant"]
    names += [f"length_g{b}" for b in range(GLOBAL_BINS)]
    names += [f"position_{p}" for p in range(1, POSITIONS + 1)] + ["position_later"]
    names += ["meansim_raw"]
    names += [f"meansim_g{b}" for b in range(GLOBAL_BINS)]
    names += [f"meansim_l{b}" for b in range(LOCAL_SIM_BINS)]
    names += ["lexrank_raw"]
    names += [f"lexrank_g{b}" for b in range(GLOBAL_BINS)]
    names += [f"lexrank_l{b}" for b in range(LOCAL_LEX_BINS)]
    return tuple(names)


FEATURE_NAMES = _names()
N_FEATURES = len(FEATURE_NAMES)


@dataclass(frozen=True)
class IdfTable:
    """Document frequencies over a training collection.

    ``idf(t) = log((D + 1) / (df(t) + 1)) + 1``; unseen terms have ``df = 0``.
    """

    df: dict[str, int]
    n_docs: int

    def idf(self, term: str) -> float:
        return math.log((self.n_docs + 1) / (self.df.get(term, 0) + 1)) + 1.0

    def to_dict(self) -> dict:
        return {"n_docs": self.n_docs, "df": dict(sorted(self.df.items()))}

    @classmethod
    def from_dict(cls, d) -> "IdfTable":
        return cls({str(k): int(v) for k, v in d["df"].items()}, int(d["n_docs"]))


def build_idf(clusters: Sequence[Cluster]) -> IdfTable:
    df: Counter = Counter()
    n_docs = 0
    for c in clusters:
        for doc in c.documents:
            n_docs += 1
            df.update({t for s in doc for t in tokenize(s.text)})
    return IdfTable(dict(df), n_docs)


def tfidf_vectors(cluster: Cluster, idf: IdfTable):
    """Raw-count tf times idf, L2-normalized per sentence.

    Returns ``(vocab, T, zero)`` where ``T`` is a dense (n, |vocab|) matrix
    and ``zero`` flags sentences without any token (their row is zero).
    """
    toks = [Counter(tokenize(s.text)) for s in cluster.sentences]
    vocab = sorted({t for c in toks for t in c})
    col = {t: j for j, t in enumerate(vocab)}
    weights = np.array([idf.idf(t) for t in vocab])
    T = np.zeros((len(toks), len(vocab)))
    for i, c in enumerate(toks):
        for t, k in c.items():
            T[i, col[t]] = k
    T *= weights[None, :]
    norms = np.linalg.norm(T, axis=1)
    zero = norms == 0.0
    T[~zero] /= norms[~zero, None]
    return vocab, T, zero


def cosine_matrix(T: np.ndarray) -> np.ndarray:
    C = T @ T.T
    return np.clip(0.5 * (C + C.T), -1.0, 1.0)


def phi_features(tfidf, rho: float) -> np.ndarray:
    """Append the constant ``rho`` and renormalize to unit length."""
    v = np.append(np.asarray(tfidf, dtype=float), rho)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError("zero tf-idf vector with rho = 0 has no direction")
    return v / norm


def phi_matrix(T: np.ndarray, zero, rho: float) -> np.ndarray:
    """Similarity vectors for a whole cluster.

    Sentences flagged in ``zero`` get a private unit coordinate before the
    ``rho`` augmentation, so they stay orthogonal to every other tf-idf
    direction and all pairwise similarities follow
    ``(cos + rho^2) / (1 + rho^2)``.
    """
    if rho < 0:
        raise ValueError(f"rho must be nonnegative, got {rho}")
    zero = np.asarray(zero, dtype=bool)
    n = T.shape[0]
    extra = np.zeros((n, int(zero.sum())))
    extra[np.flatnonzero(zero), np.arange(extra.shape[1])] = 1.0
    V = np.hstack([T, extra, np.full((n, 1), float(rho))])
    return V / np.linalg.norm(V, axis=1, keepdims=True)


def lexrank(cosine, tol: float = 1e-10, max_iter: int = 10_000) -> np.ndarray:
    """Stationary distribution of the row-normalized similarity matrix.

    All-zero rows are replaced by uniform rows.  No damping.  Power
    iteration starts from the uniform vector and stops when successive
    iterates differ by less than ``tol`` in max-norm.
    """
    C = np.array(cosine, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError("cosine matrix must be square")
    if np.any(C < 0):
        raise ValueError("lexrank needs nonnegative similarities")
    n = C.shape[0]
    if n == 0:
        return np.zeros(0)
    rows = C.sum(axis=1)
    C[rows == 0.0] = 1.0
    P = C / C.sum(axis=1, keepdims=True)
    p = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = P.T @ p
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - p)) < tol:
            p = nxt
            break
        p = nxt
    return p


def mean_cluster_similarity(cosine) -> np.ndarray:
    """Average cosine of each sentence to every other sentence in the cluster."""
    C = np.asarray(cosine, dtype=float)
    n = C.shape[0]
    if n < 2:
        return np.zeros(n)
    return (C.sum(axis=1) - np.diag(C)) / (n - 1)


def quantile_edges(values, bins: int) -> np.ndarray:
    """Edges at quantiles ``1/bins, ..., (bins-1)/bins`` (linear interpolation)."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("cannot compute quantiles of no values")
    qs = np.arange(1, bins) / bins
    return np.quantile(values, qs, method="linear")


def bin_index(values, edges) -> np.ndarray:
    """Bin of each value: the number of edges strictly below it."""
    return np.searchsorted(np.asarray(edges, dtype=float), np.asarray(values, dtype=float), side="left")


def _one_hot(idx, width) -> np.ndarray:
    out = np.zeros((len(idx), width))
    out[np.arange(len(idx)), idx] = 1.0
    return out


@dataclass(frozen=True)
class FeatureConfig:
    """Fitted feature settings: ``rho``, idf table and global bin edges."""

    rho: float
    idf: IdfTable
    length_edges: np.ndarray | None = None
    meansim_edges: np.ndarray | None = None
    lexrank_edges: np.ndarray | None = None
    local_sim_bins: int = LOCAL_SIM_BINS
    local_lex_bins: int = LOCAL_LEX_BINS
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError(f"rho must be nonnegative, got {self.rho}")
        for name in ("length_edges", "meansim_edges", "lexrank_edges"):
            e = getattr(self, name)
            if e is not None:
                e = np.asarray(e, dtype=float)
                if np.any(np.diff(e) < 0):
                    raise ValueError(f"{name} must be nondecreasing")
                object.__setattr__(self, name, e)

    @property
    def fitted(self) -> bool:
        return all(getattr(self, n) is not None for n in ("length_edges", "meansim_edges", "lexrank_edges"))

    def bin_edges(self) -> dict[str, list[float]]:
        return {
            "length": [float(x) for x in self.length_edges],
            "meansim": [float(x) for x in self.meansim_edges],
            "lexrank": [float(x) for x in self.lexrank_edges],
        }


def _cluster_stats(cluster: Cluster, idf: IdfTable):
    _, T, zero = tfidf_vectors(cluster, idf)
    C = cosine_matrix(T)
    lengths = np.array([s.nbytes for s in cluster.sentences], dtype=float)
    return T, zero, C, lengths, mean_cluster_similarity(C), lexrank(np.clip(C, 0.0, None))


def fit_bins(clusters: Sequence[Cluster], rho: float = 0.3, idf: IdfTable | None = None) -> FeatureConfig:
    """Fit the idf table (unless given) and global quantile bin edges on training clusters."""
    clusters = list(clusters)
    if not clusters:
        raise ValueError("fit_bins needs at least one training cluster")
    idf = idf or build_idf(clusters)
    lengths, sims, lex = [], [], []
    for c in clusters:
        _, _, _, ln, ms, lr = _cluster_stats(c, idf)
        lengths.append(ln)
        sims.append(ms)
        lex.append(lr)
    return FeatureConfig(
        rho=rho,
        idf=idf,
        length_edges=quantile_edges(np.concatenate(lengths), GLOBAL_BINS),
        meansim_edges=quantile_edges(np.concatenate(sims), GLOBAL_BINS),
        lexrank_edges=quantile_edges(np.concatenate(lex), GLOBAL_BINS),
    )


def quality_features(cluster: Cluster, config: FeatureConfig, stats=None) -> np.ndarray:
    """The (n, 39) quality feature matrix of a cluster, columns as in ``FEATURE_NAMES``."""
    if not config.fitted:
        raise ValueError("feature config has no bin edges; run fit_bins first")
    _, _, _, lengths, msim, lr = stats if stats is not None else _cluster_stats(cluster, config.idf)
    n = lengths.shape[0]
    pos = np.array([min(s.pos, POSITIONS) for s in cluster.sentences])
    blocks = [
        np.ones((n, 1)),
        _one_hot(bin_index(lengths, config.length_edges), GLOBAL_BINS),
        _one_hot(pos, POSITIONS + 1),
        msim[:, None],
        _one_hot(bin_index(msim, config.meansim_edges), GLOBAL_BINS),
        _one_hot(bin_index(msim, quantile_edges(msim, config.local_sim_bins)), config.local_sim_bins),
        lr[:, None],
        _one_hot(bin_index(lr, config.lexrank_edges), GLOBAL_BINS),
        _one_hot(bin_index(lr, quantile_edges(lr, config.local_lex_bins)), config.local_lex_bins),
    ]
    F = np.hstack(blocks)
    assert F.shape[1] == N_FEATURES
    return F
