"""Greedy extractive oracle, summary assembly and the lead baseline."""
from __future__ import annotations

from collections import Counter
from typing import Iterable

from .corpus import Cluster, tokenize
from .rouge import f_measure

__all__ = ["DEFAULT_BUDGET", "oracle_sequence", "oracle_summary", "assemble_summary", "begin_summary", "truncate_bytes"]

DEFAULT_BUDGET = 665


def _mean_f(sent: Counter, refs: list[Counter]) -> float:
    size = sum(sent.values())
    if size == 0 or not refs:
        return 0.0
    total = 0.0
    for r in refs:
        rsize = sum(r.values())
        if rsize == 0:
            continue
        hit = sum((sent & r).values())
        total += f_measure(hit / size, hit / rsize)
    return total / len(refs)


def oracle_sequence(cluster: Cluster, budget: float = DEFAULT_BUDGET) -> list[int]:
    """Sentence indices in the order the greedy oracle picks them.

    Each round scores every unpicked sentence that still fits the budget by
    its mean unigram F against the references, takes the best (lowest index
    on ties), then removes that sentence's words from every reference
    (counts floored at zero).  Stops when nothing fits or the best score is 0.
    """
    sents = cluster.sentences
    bags = [Counter(tokenize(s.text)) for s in sents]
    costs = [s.nbytes for s in sents]
    refs = [Counter(tokenize(r)) for r in cluster.references]
    picked: list[int] = []
    spent = 0
    while True:
        best, best_score = -1, 0.0
        for i, bag in enumerate(bags):
            if i in picked or spent + costs[i] > budget:
                continue
            score = _mean_f(bag, refs)
            if score > best_score:
                best, best_score = i, score
        if best < 0:
            break
        picked.append(best)
        spent += costs[best]
        refs = [r - bags[best] for r in refs]
    return picked


def oracle_summary(cluster: Cluster, budget: float = DEFAULT_BUDGET) -> tuple[int, ...]:
    return tuple(sorted(oracle_sequence(cluster, budget)))


def truncate_bytes(text: str, budget: int) -> str:
    """Cut ``text`` to at most ``budget`` UTF-8 bytes without splitting a character."""
    raw = text.encode("utf-8")
    if len(raw) <= budget:
        return text
    return raw[: int(budget)].decode("utf-8", errors="ignore")


def assemble_summary(cluster: Cluster, Y: Iterable[int], budget: int = DEFAULT_BUDGET) -> str:
    """Selected sentences in original (document, position) order, space-joined and byte-trimmed."""
    sents = cluster.sentences
    chosen = sorted((sents[i] for i in set(Y)), key=lambda s: (s.doc, s.pos))
    return truncate_bytes(" ".join(s.text for s in chosen), budget)


def begin_summary(cluster: Cluster, budget: int = DEFAULT_BUDGET) -> str:
    """The first ``budget`` bytes of the cluster text."""
    return truncate_bytes(cluster.text(), budget)
