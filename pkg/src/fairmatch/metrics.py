"""Accuracy and aggregate-diversity metrics for a batch of top-n lists."""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Mapping

from .errors import InputError
from .ingest import RatingsTable

log = logging.getLogger(__name__)


@dataclass
class RecommendationBatch:
    lists: dict[str, list[str]]
    catalog_size: int

    def __post_init__(self):
        if self.catalog_size <= 0:
            raise InputError("catalog_size must be positive")
        distinct = {i for items in self.lists.values() for i in items}
        if len(distinct) > self.catalog_size:
            raise InputError(
                f"{len(distinct)} distinct items recommended but catalog_size is {self.catalog_size}"
            )

    @property
    def n(self) -> int:
        return max((len(items) for items in self.lists.values()), default=0)


@dataclass
class MetricsReport:
    precision: float
    coverage: float
    gini: float
    entropy: float
    longtail_coverage: float
    n: int
    k_percent: float

    def as_row(self, method: str, alpha: float | None, t: int) -> dict:
        row = asdict(self)
        row.pop("k_percent")
        row.update(method=method, alpha="" if alpha is None else alpha, t=t)
        return row


def precision_at_n(batch: RecommendationBatch, test_profiles: Mapping[str, set[str]]) -> float:
    """Mean fraction of each list found in the user's test profile."""
    if not batch.lists:
        return 0.0
    total = 0.0
    for user, items in batch.lists.items():
        hits = len(set(items) & test_profiles.get(user, set()))
        total += hits / len(items) if items else 0.0
    return total / len(batch.lists)


def coverage_at_n(batch: RecommendationBatch) -> float:
    distinct = {i for items in batch.lists.values() for i in items}
    return len(distinct) / batch.catalog_size


def item_probability(batch: RecommendationBatch) -> dict[str, float]:
    """Share of all recommendation slots taken by each recommended item."""
    counts = Counter(i for items in batch.lists.values() for i in items)
    slots = sum(counts.values())
    if slots == 0:
        raise InputError("batch contains no recommendations")
    return {item: c / slots for item, c in counts.items()}


def gini_index(batch: RecommendationBatch) -> float:
    """Gini coefficient of item exposure over the whole catalog.

    Unrecommended catalog items count as zero-probability entries and sort
    first, so only the recommended items contribute to the sum.
    """
    size = batch.catalog_size
    if size < 2:
        raise InputError("Gini needs a catalog of at least two items")
    probs = item_probability(batch)
    ordered = sorted(probs.items(), key=lambda kv: (kv[1], kv[0]))
    offset = size - len(ordered)
    total = math.fsum((2 * (offset + k) - size - 1) * p for k, (_, p) in enumerate(ordered, 1))
    return total / (size - 1)


def entropy(batch: RecommendationBatch, base: float = math.e) -> float:
    probs = item_probability(batch).values()
    return -math.fsum(p * math.log(p) for p in probs if p > 0) / math.log(base)


def long_tail_split(train: RatingsTable, k_percent: float) -> tuple[set[str], set[str]]:
    """Short head: most-rated items whose cumulative rating share first reaches ``k_percent``."""
    if not 0 < k_percent < 100:
        raise InputError(f"k_percent must be in (0, 100), got {k_percent}")
    counts = train.item_counts()
    if not counts:
        raise InputError("no ratings to split")
    total = sum(counts.values())
    ordered = sorted(counts, key=lambda item: (-counts[item], item))
    head: set[str] = set()
    running = 0
    for item in ordered:
        head.add(item)
        running += counts[item]
        if running * 100 >= k_percent * total:
            break
    return head, set(ordered) - head


def long_tail_coverage(batch: RecommendationBatch, long_tail: set[str]) -> float:
    if not long_tail:
        log.warning("long-tail set is empty; reporting coverage 0")
        return 0.0
    distinct = {i for items in batch.lists.values() for i in items}
    return len(distinct & long_tail) / len(long_tail)


def evaluate(
    batch: RecommendationBatch,
    test_profiles: Mapping[str, set[str]],
    long_tail: set[str],
    k_percent: float,
) -> MetricsReport:
    return MetricsReport(
        precision=precision_at_n(batch, test_profiles),
        coverage=coverage_at_n(batch),
        gini=gini_index(batch),
        entropy=entropy(batch),
        longtail_coverage=long_tail_coverage(batch, long_tail),
        n=batch.n,
        k_percent=k_percent,
    )

