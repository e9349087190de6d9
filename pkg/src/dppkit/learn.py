"""Conditional DPPs with log-linear quality: likelihood, gradient and training.

Each instance fixes its own similarity vectors; only the quality weights
``theta`` are learned.  Quality is ``q_i = exp(theta . f_i / 2)`` so that
``L_ii = exp(theta . f_i)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from .core import SymmetricKernel, as_subset
from .linalg import logdet_psd
from .optim import maximize

__all__ = [
    "QualityClipWarning",
    "Instance",
    "ConditionalModel",
    "quality",
    "qualities",
    "build_conditional_l",
    "log_likelihood",
    "log_likelihood_decomposed",
    "gradient",
    "value_and_gradient",
    "train",
]

DOT_CLIP = 500.0


class QualityClipWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class Instance:
    """One input X: per-item quality features, similarity vectors and costs.

    ``features`` is (n, m), ``phi`` is (n, d) with unit-norm rows, ``costs``
    has length n.  ``gold`` is the target subset, when known.
    """

    features: np.ndarray
    phi: np.ndarray
    costs: np.ndarray | None = None
    gold: tuple[int, ...] | None = None
    id: str = ""
    provenance: tuple = ()

    def __post_init__(self):
        f = np.atleast_2d(np.asarray(self.features, dtype=float))
        phi = np.asarray(self.phi, dtype=float)
        if phi.ndim == 1:
            phi = phi.reshape(-1, 1)
        n = f.shape[0]
        if phi.shape[0] != n:
            raise ValueError(f"instance {self.id!r}: {n} feature rows but {phi.shape[0]} phi rows")
        norms = np.linalg.norm(phi, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > 1e-9)
        if bad.size:
            raise ValueError(f"instance {self.id!r}: phi row {bad[0]} has norm {norms[bad[0]]:.12g}")
        costs = np.zeros(n) if self.costs is None else np.asarray(self.costs, dtype=float).reshape(-1)
        if costs.shape[0] != n or np.any(costs < 0) or not np.all(np.isfinite(costs)):
            raise ValueError(f"instance {self.id!r}: costs must be {n} finite nonnegative values")
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "costs", costs)
        if self.gold is not None:
            object.__setattr__(self, "gold", as_subset(self.gold, n))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def m(self) -> int:
        return self.features.shape[1]

    def similarity(self) -> np.ndarray:
        return self.phi @ self.phi.T


@dataclass(frozen=True)
class ConditionalModel:
    theta: np.ndarray
    sigma2: float = math.inf
    rho: float | None = None
    feature_names: tuple[str, ...] = ()
    bin_edges: dict[str, Any] = field(default_factory=dict)
    status: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float).reshape(-1)
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta has non-finite entries")
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @property
    def m(self) -> int:
        return self.theta.shape[0]

    def with_theta(self, theta) -> "ConditionalModel":
        return replace(self, theta=np.asarray(theta, dtype=float))

    def prior(self) -> float:
        if math.isinf(self.sigma2):
            return 0.0
        return -float(np.dot(self.theta, self.theta)) / (2.0 * self.sigma2)


def _dots(theta, F) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    F = np.atleast_2d(np.asarray(F, dtype=float))
    if F.shape[1] != theta.shape[0]:
        raise ValueError(f"feature dimension {F.shape[1]} does not match theta dimension {theta.shape[0]}")
    d = F @ theta
    if not np.all(np.isfinite(d)):
        bad = d[~np.isfinite(d)][0]
        raise OverflowError(f"quality dot product theta.f = {bad} is not finite")
    if np.any(np.abs(d) > DOT_CLIP):
        worst = float(d[np.argmax(np.abs(d))])
        warnings.warn(f"theta.f = {worst:.6g} clipped to +/-{DOT_CLIP}", QualityClipWarning, stacklevel=3)
        d = np.clip(d, -DOT_CLIP, DOT_CLIP)
    return d


def quality(theta, f) -> float:
    """``exp(theta . f / 2)`` for a single feature vector."""
    return float(np.exp(0.5 * _dots(theta, np.asarray(f, dtype=float).reshape(1, -1))[0]))


def qualities(theta, F) -> np.ndarray:
    return np.exp(0.5 * _dots(theta, F))


def _theta(model) -> np.ndarray:
    return model.theta if isinstance(model, ConditionalModel) else np.asarray(model, dtype=float)


def build_conditional_l(model, inst: Instance) -> SymmetricKernel:
    """``L_ij(X) = q_i q_j phi_i . phi_j`` with log-linear qualities."""
    q = qualities(_theta(model), inst.features)
    g = inst.phi * q[:, None]
    return SymmetricKernel(g @ g.T)


def _instance_terms(theta, inst: Instance):
    """Log-likelihood and gradient contribution of one instance (no prior)."""
    L = build_conditional_l(theta, inst)
    lam = L.psd_eigenvalues()
    V = L.eig[1]
    log_z = float(np.sum(np.log1p(lam)))
    gold = inst.gold
    if gold is None:
        raise ValueError(f"instance {inst.id!r} has no gold subset")
    ll = logdet_psd(L.submatrix(gold)) - log_z
    k_diag = (V * V) @ (lam / (1.0 + lam))
    grad = inst.features[list(gold)].sum(axis=0) - k_diag @ inst.features
    return ll, grad


def _fsum_rows(rows, m):
    if not rows:
        return np.zeros(m)
    stacked = np.array(rows)
    return np.array([math.fsum(stacked[:, j]) for j in range(stacked.shape[1])])


def value_and_gradient(model, insts: Sequence[Instance], sigma2: float | None = None):
    """Penalized log-likelihood and its gradient, summed over instances.

    ``sigma2`` defaults to the model's prior variance (``inf`` disables it).
    Per-instance terms are combined with compensated summation so that the
    result does not depend on instance order beyond rounding.
    """
    theta = _theta(model)
    if sigma2 is None:
        sigma2 = model.sigma2 if isinstance(model, ConditionalModel) else math.inf
    values, grads = [], []
    for inst in insts:
        v, g = _instance_terms(theta, inst)
        values.append(v)
        grads.append(g)
    if any(v == -math.inf for v in values):
        value = -math.inf
    else:
        value = math.fsum(values)
    grad = _fsum_rows(grads, theta.shape[0])
    if not math.isinf(sigma2):
        value -= float(np.dot(theta, theta)) / (2.0 * sigma2)
        grad = grad - theta / sigma2
    return value, grad


def log_likelihood(model, insts: Sequence[Instance], sigma2: float | None = None) -> float:
    """Sum of ``log det(L_Y) - log det(L + I)`` minus the Gaussian prior penalty."""
    return value_and_gradient(model, insts, sigma2)[0]


def gradient(model, insts: Sequence[Instance], sigma2: float | None = None) -> np.ndarray:
    """Empirical minus expected feature counts, minus ``theta / sigma2``.

    Expected counts use the marginal kernel diagonal
    ``K_ii = sum_k lambda_k / (1 + lambda_k) v_ki^2``.
    """
    return value_and_gradient(model, insts, sigma2)[1]


def log_likelihood_decomposed(model, insts: Sequence[Instance], sigma2: float | None = None) -> float:
    """Same objective written as ``theta . sum_Y f + log det S_Y - log Z``.

    Kept separate from :func:`log_likelihood` as a cross-check of the
    quality/diversity factorization.
    """
    theta = _theta(model)
    if sigma2 is None:
        sigma2 = model.sigma2 if isinstance(model, ConditionalModel) else math.inf
    total = []
    for inst in insts:
        gold = list(inst.gold)
        linear = float(np.sum(_dots(theta, inst.features[gold]))) if gold else 0.0
        S = inst.similarity()
        log_det_s = logdet_psd(S[np.ix_(gold, gold)])
        L = build_conditional_l(theta, inst)
        log_z = float(np.sum(np.log1p(L.psd_eigenvalues())))
        total.append(linear + log_det_s - log_z)
    value = -math.inf if -math.inf in total else math.fsum(total)
    if not math.isinf(sigma2):
        value -= float(np.dot(theta, theta)) / (2.0 * sigma2)
    return value


def train(
    insts: Sequence[Instance],
    sigma2: float,
    *,
    tol: float = 1e-6,
    max_iter: int = 500,
    history: int = 10,
    plain_gd: bool = False,
    theta0=None,
    **metadata,
) -> ConditionalModel:
    """Fit ``theta`` by maximizing the penalized log-likelihood.

    Starts from ``theta = 0`` unless ``theta0`` is given.  The returned
    model's ``status`` records whether the gradient tolerance was met, the
    iteration count and the final gradient infinity-norm.  Extra keyword
    arguments (``rho``, ``feature_names``, ``bin_edges``) are stored on the
    model untouched.
    """
    insts = list(insts)
    if not insts:
        raise ValueError("training set is empty")
    m = insts[0].m
    for inst in insts:
        if inst.gold is None:
            raise ValueError(f"instance {inst.id!r} has no gold subset")
        if inst.m != m:
            raise ValueError(f"instance {inst.id!r} has feature dimension {inst.m}, expected {m}")
    x0 = np.zeros(m) if theta0 is None else np.asarray(theta0, dtype=float)

    def fun(theta):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", QualityClipWarning)
            return value_and_gradient(theta, insts, sigma2)

    res = maximize(fun, x0, tol=tol, max_iter=max_iter, history=history, plain=plain_gd)
    status = {
        "converged": bool(res.converged),
        "iterations": int(res.iterations),
        "grad_norm": res.grad_norm,
        "objective": float(res.value),
        "message": res.message,
        "optimizer": "gradient-ascent" if plain_gd else "lbfgs",
    }
    return ConditionalModel(theta=res.x, sigma2=sigma2, status=status, **metadata)
