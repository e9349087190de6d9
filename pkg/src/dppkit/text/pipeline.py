"""Glue between clusters and conditional DPPs: instances, training, summarizing."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..core import SymmetricKernel
from ..infer import BudgetSpec, SelectionResult, greedy_map, mmr_select, sampled_map
from ..learn import ConditionalModel, Instance, build_conditional_l, train
from ..sampler import SamplerState
from .corpus import Cluster
from .features import FEATURE_NAMES, FeatureConfig, _cluster_stats, fit_bins, phi_matrix, quality_features
from .oracle import DEFAULT_BUDGET, assemble_summary, oracle_summary

log = logging.getLogger(__name__)

__all__ = [
    "LogisticQuality",
    "build_instance",
    "train_on_clusters",
    "fit_logistic_quality",
    "select_sentences",
    "summarize_cluster",
    "mmr_summary",
]


def build_instance(cluster: Cluster, config: FeatureConfig, budget: float = DEFAULT_BUDGET, with_gold: bool = True) -> Instance:
    """Features, similarity vectors, byte costs and (optionally) the oracle target."""
    stats = _cluster_stats(cluster, config.idf)
    T, zero = stats[0], stats[1]
    F = quality_features(cluster, config, stats=stats)
    phi = phi_matrix(T, zero, config.rho)
    sents = cluster.sentences
    gold = oracle_summary(cluster, budget) if with_gold and cluster.references else None
    return Instance(
        features=F,
        phi=phi,
        costs=np.array([s.nbytes for s in sents], dtype=float),
        gold=gold,
        id=cluster.id,
        provenance=tuple((s.doc, s.pos) for s in sents),
    )


@dataclass(frozen=True)
class LogisticQuality:
    """Per-sentence inclusion probabilities from a logistic regression on the quality features."""

    coef: np.ndarray
    intercept: float

    def __call__(self, F) -> np.ndarray:
        z = np.asarray(F, dtype=float) @ np.asarray(self.coef, dtype=float) + self.intercept
        return 1.0 / (1.0 + np.exp(-z))

    def to_dict(self) -> dict:
        return {"coef": [float(c) for c in self.coef], "intercept": float(self.intercept)}

    @classmethod
    def from_dict(cls, d) -> "LogisticQuality":
        return cls(np.asarray(d["coef"], dtype=float), float(d["intercept"]))


def fit_logistic_quality(insts: Sequence[Instance]) -> LogisticQuality | None:
    """Sentence-level classifier of oracle membership; ``None`` if labels are one-sided."""
    from sklearn.linear_model import LogisticRegression

    X = np.vstack([inst.features for inst in insts])
    y = np.concatenate([np.isin(np.arange(inst.n), inst.gold).astype(int) for inst in insts])
    if y.min() == y.max():
        return None
    clf = LogisticRegression(max_iter=5000)
    clf.fit(X, y)
    return LogisticQuality(clf.coef_[0].copy(), float(clf.intercept_[0]))


def train_on_clusters(
    clusters: Sequence[Cluster],
    sigma2: float,
    rho: float = 0.3,
    budget: float = DEFAULT_BUDGET,
    tol: float = 1e-6,
    max_iter: int = 500,
    plain_gd: bool = False,
):
    """Fit bins, build oracle-labelled instances and train.

    Returns ``(model, config, logistic)`` where ``logistic`` is the
    sentence-level quality model used by the MMR baseline (may be ``None``).
    """
    clusters = list(clusters)
    config = fit_bins(clusters, rho=rho)
    insts = [build_instance(c, config, budget) for c in clusters]
    insts = [i for i in insts if i.gold is not None]
    if not insts:
        raise ValueError("no training cluster has reference summaries")
    log.info("training on %d instances, %d features", len(insts), insts[0].m)
    model = train(
        insts,
        sigma2,
        tol=tol,
        max_iter=max_iter,
        plain_gd=plain_gd,
        rho=rho,
        feature_names=FEATURE_NAMES,
        bin_edges=config.bin_edges(),
    )
    return model, config, fit_logistic_quality(insts)


def select_sentences(
    model: ConditionalModel,
    inst: Instance,
    budget: float = DEFAULT_BUDGET,
    method: str = "greedy",
    mode: str = "literal",
    seed: int = 0,
    samples: int = 100_000,
    window: tuple[float, float] = (660.0, 680.0),
) -> tuple[SelectionResult, SymmetricKernel]:
    L = build_conditional_l(model, inst)
    if method == "greedy":
        res = greedy_map(L, BudgetSpec(inst.costs, budget), mode=mode)
    elif method == "sampled":
        res = sampled_map(SamplerState(L, seed), inst.costs, window[0], window[1], samples)
    else:
        raise ValueError(f"unknown method {method!r}")
    return res, L


def summarize_cluster(
    model: ConditionalModel,
    config: FeatureConfig,
    cluster: Cluster,
    budget: int = DEFAULT_BUDGET,
    **kwargs,
) -> tuple[str, SelectionResult]:
    inst = build_instance(cluster, config, budget, with_gold=False)
    res, _ = select_sentences(model, inst, budget, **kwargs)
    return assemble_summary(cluster, res.chosen, budget), res


def mmr_summary(
    quality_fn,
    config: FeatureConfig,
    cluster: Cluster,
    lam: float,
    budget: int = DEFAULT_BUDGET,
) -> tuple[str, SelectionResult]:
    """MMR baseline: relevance from ``quality_fn(features)``, redundancy from tf-idf cosine."""
    inst = build_instance(cluster, config, budget, with_gold=False)
    stats = _cluster_stats(cluster, config.idf)
    cos = stats[2].copy()
    np.fill_diagonal(cos, 1.0)
    res = mmr_select(quality_fn(inst.features), cos, lam, BudgetSpec(inst.costs, budget))
    return assemble_summary(cluster, res.chosen, budget), res
