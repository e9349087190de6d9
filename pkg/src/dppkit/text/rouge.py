"""Clipped n-gram overlap scores in the style of ROUGE-N (no stemming)."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .corpus import tokenize

__all__ = ["NgramScore", "ngrams", "ngram_score", "f_measure"]


@dataclass(frozen=True)
class NgramScore:
    n: int
    precision: float
    recall: float
    f_measure: float


def f_measure(p: float, r: float) -> float:
    return 0.0 if p + r == 0.0 else 2.0 * p * r / (p + r)


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def ngram_score(candidate: str, references: Sequence[str], n: int = 1) -> NgramScore:
    """Precision, recall and F of ``candidate`` against one or more references.

    Recall is micro-averaged: clipped matches summed over references divided
    by the summed reference n-gram counts.  Precision clips each candidate
    n-gram count by its largest count in any single reference.
    """
    if n not in (1, 2):
        raise ValueError(f"n must be 1 or 2, got {n}")
    cand = ngrams(tokenize(candidate), n)
    refs = [ngrams(tokenize(r), n) for r in references]
    cand_total = sum(cand.values())
    if cand_total == 0 or not refs:
        return NgramScore(n, 0.0, 0.0, 0.0)
    hits = sum(sum((cand & r).values()) for r in refs)
    ref_total = sum(sum(r.values()) for r in refs)
    best = Counter()
    for r in refs:
        best |= r
    p = sum((cand & best).values()) / cand_total
    r = hits / ref_total if ref_total else 0.0
    return NgramScore(n, p, r, f_measure(p, r))
