"""Baseline re-rankers. Each takes a top-t list and returns n of its items."""

from __future__ import annotations

import random
from typing import Sequence

from .algorithm import FairMatchConfig, fairmatch_rerank
from .errors import InputError
from .ingest import RecEntry, RecommendationTable

METHODS = ("none", "random", "reverse", "fairmatch")


def _check(items: Sequence[str], n: int) -> None:
    if n <= 0:
        raise InputError(f"n must be positive, got {n}")
    if len(items) < n:
        raise InputError(f"list of {len(items)} items is shorter than n={n}")


def rerank_none(items: Sequence[str], n: int) -> list[str]:
    _check(items, n)
    return list(items[:n])


def rerank_random(items: Sequence[str], n: int, seed) -> list[str]:
    """Uniform sample of ``n`` positions, returned in original rank order."""
    _check(items, n)
    picked = random.Random(seed).sample(range(len(items)), n)
    return [items[r] for r in sorted(picked)]


def rerank_reverse(items: Sequence[str], n: int) -> list[str]:
    """The bottom ``n`` items, kept in original rank order."""
    _check(items, n)
    return list(items[len(items) - n :])


def rerank_table(
    recs: RecommendationTable,
    method: str,
    n: int,
    alpha: float = 0.5,
    seed: int = 0,
    weight_scale: int = 100,
) -> dict[str, list[str]]:
    """Apply ``method`` to every user's list; returns user -> top-n items."""
    lists = recs.as_item_lists()
    if method == "none":
        return {u: rerank_none(items, n) for u, items in lists.items()}
    if method == "random":
        # per-user seed keeps a user's sample independent of table order
        return {u: rerank_random(items, n, f"{seed}:{u}") for u, items in lists.items()}
    if method == "reverse":
        return {u: rerank_reverse(items, n) for u, items in lists.items()}
    if method == "fairmatch":
        cfg = FairMatchConfig(alpha=alpha, t=recs.t, n=n, weight_scale=weight_scale)
        return fairmatch_rerank(recs, cfg)
    raise InputError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


def to_table(lists: dict[str, list[str]], source: RecommendationTable) -> RecommendationTable:
    """Re-ranked lists as a table, each item keeping its score from ``source``."""
    out = RecommendationTable()
    for user, items in lists.items():
        scores = {e.item: e.score for e in source.lists[user]}
        out.lists[user] = [RecEntry(item, r, scores[item]) for r, item in enumerate(items, 1)]
    return out
