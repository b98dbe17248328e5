"""Tab-separated ratings/recommendation files, synthetic data, and a popularity recommender.

Ratings files hold ``user<TAB>item<TAB>rating`` and recommendation files
``user<TAB>item<TAB>rank<TAB>score``. Blank lines and lines starting with
``#`` are skipped.
"""

from __future__ import annotations

import csv
import logging
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InputError

log = logging.getLogger(__name__)

METRICS_HEADER = (
    "method",
    "alpha",
    "t",
    "n",
    "precision",
    "coverage",
    "gini",
    "entropy",
    "longtail_coverage",
)


@dataclass
class RatingsTable:
    ratings: dict[tuple[str, str], float] = field(default_factory=dict)
    duplicates: int = 0

    @classmethod
    def from_records(cls, records: Iterable[tuple[str, str, float]]) -> RatingsTable:
        table = cls()
        for user, item, rating in records:
            table.add(user, item, rating)
        return table

    def add(self, user: str, item: str, rating: float) -> None:
        if (user, item) in self.ratings:
            self.duplicates += 1
        self.ratings[(user, item)] = float(rating)

    def __len__(self) -> int:
        return len(self.ratings)

    def records(self) -> list[tuple[str, str, float]]:
        return [(u, i, r) for (u, i), r in self.ratings.items()]

    def item_counts(self) -> Counter:
        return Counter(item for _, item in self.ratings)

    @property
    def items(self) -> set[str]:
        return {item for _, item in self.ratings}

    @property
    def users(self) -> list[str]:
        return list(dict.fromkeys(user for user, _ in self.ratings))

    def profiles(self) -> dict[str, set[str]]:
        out: dict[str, set[str]] = {}
        for user, item in self.ratings:
            out.setdefault(user, set()).add(item)
        return out


@dataclass(frozen=True)
class RecEntry:
    item: str
    rank: int
    score: float


@dataclass
class RecommendationTable:
    """Per-user ranked lists, ranks 1..t."""

    lists: dict[str, list[RecEntry]] = field(default_factory=dict)

    @classmethod
    def from_ranked(cls, ranked: Mapping[str, Sequence[str]]) -> RecommendationTable:
        """Table from plain item sequences; scores count down from the list length."""
        lists = {}
        for user, items in ranked.items():
            size = len(items)
            lists[user] = [RecEntry(item, r, float(size - r + 1)) for r, item in enumerate(items, 1)]
        return cls(lists)

    @property
    def t(self) -> int:
        lengths = {len(entries) for entries in self.lists.values()}
        if len(lengths) != 1:
            raise InputError(f"lists have differing lengths {sorted(lengths)}")
        return lengths.pop()

    @property
    def users(self) -> list[str]:
        return list(self.lists)

    @property
    def items(self) -> set[str]:
        return {e.item for entries in self.lists.values() for e in entries}

    def ranked_items(self, user: str) -> list[str]:
        return [e.item for e in sorted(self.lists[user], key=lambda e: e.rank)]

    def as_item_lists(self) -> dict[str, list[str]]:
        return {user: self.ranked_items(user) for user in self.lists}

    def validate(self, t: int | None = None) -> int:
        """Check rank contiguity and list length; return the number of score-order violations."""
        violations = 0
        for user, entries in self.lists.items():
            if t is not None and len(entries) != t:
                raise InputError(f"user {user!r} has {len(entries)} recommendations, expected {t}")
            ranks = sorted(e.rank for e in entries)
            if ranks != list(range(1, len(entries) + 1)):
                raise InputError(f"user {user!r} has ranks {ranks}, expected 1..{len(entries)}")
            ordered = sorted(entries, key=lambda e: e.rank)
            violations += sum(a.score < b.score for a, b in zip(ordered, ordered[1:]))
        return violations


def _data_lines(path: Path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            yield lineno, line.split("\t")


def parse_ratings(path: str | Path) -> RatingsTable:
    path = Path(path)
    table = RatingsTable()
    for lineno, fields in _data_lines(path):
        if len(fields) != 3:
            raise InputError(f"{path}:{lineno}: expected 3 tab-separated fields, got {len(fields)}")
        user, item, rating = fields
        try:
            value = float(rating)
        except ValueError:
            raise InputError(f"{path}:{lineno}: rating {rating!r} is not a number") from None
        if not math.isfinite(value):
            raise InputError(f"{path}:{lineno}: rating {rating!r} is not finite")
        table.add(user, item, value)
    if not table.ratings:
        raise InputError(f"{path}: no ratings")
    if table.duplicates:
        log.warning("%s: %d duplicate user/item pairs, last occurrence kept", path, table.duplicates)
    return table


def parse_recs(path: str | Path, t: int | None = None) -> RecommendationTable:
    path = Path(path)
    lists: dict[str, list[RecEntry]] = {}
    seen: set[tuple[str, int]] = set()
    for lineno, fields in _data_lines(path):
        if len(fields) != 4:
            raise InputError(f"{path}:{lineno}: expected 4 tab-separated fields, got {len(fields)}")
        user, item, rank, score = fields
        try:
            entry = RecEntry(item, int(rank), float(score))
        except ValueError:
            raise InputError(f"{path}:{lineno}: bad rank {rank!r} or score {score!r}") from None
        if (user, entry.rank) in seen:
            raise InputError(f"{path}:{lineno}: duplicate rank {entry.rank} for user {user!r}")
        seen.add((user, entry.rank))
        lists.setdefault(user, []).append(entry)
    if not lists:
        raise InputError(f"{path}: no recommendations")
    for entries in lists.values():
        entries.sort(key=lambda e: e.rank)
    table = RecommendationTable(lists)
    violations = table.validate(t)
    if violations:
        log.info("%s: %d score inversions; rank order is used", path, violations)
    return table


def write_recs(table: RecommendationTable, path: str | Path) -> None:
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            for user, entries in table.lists.items():
                for e in sorted(entries, key=lambda e: e.rank):
                    fh.write(f"{user}\t{e.item}\t{e.rank}\t{e.score!r}\n")
    except OSError as exc:
        raise OSError(f"cannot write recommendations to {path}: {exc}") from exc


def write_ratings(table: RatingsTable, path: str | Path) -> None:
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            for (user, item), rating in table.ratings.items():
                fh.write(f"{user}\t{item}\t{rating!r}\n")
    except OSError as exc:
        raise OSError(f"cannot write ratings to {path}: {exc}") from exc


def _metrics_row(row: Mapping) -> list[str]:
    out = []
    for key in METRICS_HEADER:
        value = row.get(key, "")
        if value is None:
            value = ""
        out.append(repr(value) if isinstance(value, float) else str(value))
    return out


def write_metrics(rows: Iterable[Mapping], path: str | Path, append: bool = False) -> None:
    """Write metric rows as CSV. With ``append`` the header is only written to a new or empty file."""
    path = Path(path)
    need_header = not append or not path.exists() or path.stat().st_size == 0
    try:
        with open(path, "a" if append else "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            if need_header:
                writer.writerow(METRICS_HEADER)
            for row in rows:
                writer.writerow(_metrics_row(row))
    except OSError as exc:
        raise OSError(f"cannot write metrics to {path}: {exc}") from exc


def read_metrics(path: str | Path) -> list[dict[str, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def _zipf_weights(num_items: int, exponent: float) -> np.ndarray:
    return np.arange(1, num_items + 1, dtype=float) ** -exponent


def _id_width(count: int) -> int:
    return len(str(max(count - 1, 0)))


def generate_synthetic(
    num_users: int, num_items: int, t: int, zipf_exponent: float, seed: int
) -> RecommendationTable:
    """Popularity-skewed top-``t`` lists.

    Each user's list is a weighted sample without replacement, item ``k``
    (1-based) having weight ``k ** -zipf_exponent``. Each item draws the key
    ``log(u) / w`` with ``u`` uniform on (0, 1); the ``t`` largest keys are
    the sample and double as scores.
    """
    if t > num_items:
        raise InputError(f"t={t} exceeds the number of items {num_items}")
    if num_users <= 0 or t <= 0:
        raise InputError("num_users and t must be positive")
    rng = np.random.default_rng(seed)
    weights = _zipf_weights(num_items, zipf_exponent)
    uw, iw = _id_width(num_users), _id_width(num_items)
    lists = {}
    for u in range(num_users):
        keys = np.log(1.0 - rng.random(num_items)) / weights
        order = np.argsort(-keys, kind="stable")[:t]
        lists[f"u{u:0{uw}d}"] = [
            RecEntry(f"i{int(k):0{iw}d}", rank, float(keys[k])) for rank, k in enumerate(order, 1)
        ]
    return RecommendationTable(lists)


def generate_synthetic_ratings(
    num_users: int, num_items: int, per_user: int, zipf_exponent: float, seed: int
) -> RatingsTable:
    """Implicit-feedback ratings (value 1.0) drawn with the same skew as :func:`generate_synthetic`."""
    recs = generate_synthetic(num_users, num_items, per_user, zipf_exponent, seed)
    return RatingsTable.from_records(
        (user, e.item, 1.0) for user, entries in recs.lists.items() for e in entries
    )


def train_test_split(
    table: RatingsTable, test_fraction: float = 0.2, seed: int = 0
) -> tuple[RatingsTable, RatingsTable]:
    """Per-user holdout of ``round(test_fraction * profile size)`` ratings."""
    if not 0 <= test_fraction < 1:
        raise InputError(f"test_fraction must be in [0, 1), got {test_fraction}")
    by_user: dict[str, list[tuple[str, float]]] = {}
    for (user, item), rating in table.ratings.items():
        by_user.setdefault(user, []).append((item, rating))
    train, test = RatingsTable(), RatingsTable()
    for user, rated in by_user.items():
        rng = random.Random(f"{seed}:{user}")
        held = set(rng.sample(range(len(rated)), round(test_fraction * len(rated))))
        for idx, (item, rating) in enumerate(rated):
            (test if idx in held else train).add(user, item, rating)
    return train, test


def mostpop_recommend(
    train: RatingsTable, t: int, users: Iterable[str] | None = None
) -> RecommendationTable:
    """The ``t`` most-rated items each user has not rated, ties by item id."""
    counts = train.item_counts()
    ranking = sorted(counts, key=lambda item: (-counts[item], item))
    profiles = train.profiles()
    lists = {}
    for user in train.users if users is None else users:
        seen = profiles.get(user, set())
        picked = [item for item in ranking if item not in seen][:t]
        if len(picked) < t:
            raise InputError(f"user {user!r} has only {len(picked)} unseen items, need {t}")
        lists[user] = [RecEntry(item, r, float(counts[item])) for r, item in enumerate(picked, 1)]
    return RecommendationTable(lists)
