"""Limited-memory BFGS ascent with a backtracking Armijo line search.

Only what the trainer needs: maximize a smooth concave objective given a
callable returning ``(value, gradient)``.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Callable

import numpy as np

log = logging.getLogger(__name__)

ARMIJO_C = 1e-4
MAX_HALVINGS = 50


class LineSearchError(RuntimeError):
    pass


@dataclass
class AscentResult:
    x: np.ndarray
    value: float
    grad: np.ndarray
    converged: bool
    iterations: int
    message: str

    @property
    def grad_norm(self) -> float:
        return float(np.max(np.abs(self.grad))) if self.grad.size else 0.0


def _two_loop(g, pairs):
    """L-BFGS two-loop recursion; returns an ascent direction for a concave objective."""
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * np.dot(s, q)
        alphas.append(a)
        q -= a * y
    if pairs:
        s, y, _ = pairs[-1]
        q *= np.dot(s, y) / np.dot(y, y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * np.dot(y, q)
        q += s * (a - b)
    return q


def maximize(
    fun: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0,
    tol: float = 1e-6,
    max_iter: int = 500,
    history: int = 10,
    plain: bool = False,
) -> AscentResult:
    """Maximize ``fun`` from ``x0`` until ``max|grad| < tol`` or ``max_iter`` steps.

    ``plain=True`` switches to gradient ascent with an adaptive step.  Trial
    points with a non-finite objective are rejected and the step halved;
    fifty consecutive non-finite trials raise :class:`LineSearchError`.
    """
    x = np.array(x0, dtype=float)
    f, g = fun(x)
    if not math.isfinite(f):
        raise LineSearchError(f"objective is not finite at the starting point ({f})")
    # L-BFGS works on the convex negation: pairs hold (s, y) for -f
    pairs: deque = deque(maxlen=history)
    gd_step = 1.0
    it = 0
    message = "iteration limit reached"
    converged = False
    while True:
        gnorm = float(np.max(np.abs(g))) if g.size else 0.0
        if gnorm < tol:
            converged = True
            message = "gradient below tolerance"
            break
        if it >= max_iter:
            break
        if plain:
            d = g.copy()
            step = gd_step
        else:
            d = _two_loop(g, list(pairs))
            if np.dot(d, g) <= 0.0:
                pairs.clear()
                d = g.copy()
            step = 1.0 if pairs else min(1.0, 1.0 / max(gnorm, 1e-300))
        slope = float(np.dot(g, d))
        accepted = False
        last_nonfinite = False
        for _ in range(MAX_HALVINGS):
            x_new = x + step * d
            f_new, g_new = fun(x_new)
            if not math.isfinite(f_new) or not np.all(np.isfinite(g_new)):
                last_nonfinite = True
                step *= 0.5
                continue
            last_nonfinite = False
            if f_new >= f + ARMIJO_C * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            if last_nonfinite:
                raise LineSearchError(
                    f"objective stayed non-finite after {MAX_HALVINGS} step halvings at iteration {it}"
                )
            message = "line search made no progress"
            break
        s = x_new - x
        y = g - g_new
        sy = float(np.dot(s, y))
        if sy > 1e-12 * float(np.dot(s, s)) and sy > 0.0:
            pairs.append((s, y, 1.0 / sy))
        if plain:
            gd_step = min(step * 2.0, 1e6)
        x, f, g = x_new, f_new, g_new
        it += 1
        log.debug("iter %d  objective %.12g  |grad|_inf %.3e", it, f, float(np.max(np.abs(g))))
    return AscentResult(x=x, value=f, grad=g, converged=converged, iterations=it, message=message)
