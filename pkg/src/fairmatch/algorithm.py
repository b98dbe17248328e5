"""FairMatch: iterative max-flow extraction of under-exposed, relevant items.

Each round weighs the remaining user-item graph, solves a max-flow problem
on it and collects the items whose final push-relabel label reaches the
source label (they had to send flow back to the source). Those items and
their arcs are removed and the next round runs on what is left. The
collected pairs then replace the most visible items in each user's top-n.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

from .errors import InputError
from .ingest import RecommendationTable
from .maxflow import MaxFlowResult, run_push_relabel
from .network import FlowNetwork, build_network, remove_items

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FairMatchConfig:
    alpha: float = 0.5
    t: int = 20
    n: int = 10
    weight_scale: int = 100
    max_iterations: int | None = None  # None: number of distinct items

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InputError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.n <= 0 or self.t <= 0:
            raise InputError("t and n must be positive")
        if self.n >= self.t:
            raise InputError(f"n ({self.n}) must be smaller than t ({self.t})")
        if self.weight_scale < 1:
            raise InputError("weight_scale must be at least 1")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise InputError("max_iterations must be positive")


@dataclass(frozen=True)
class WeightAssignment:
    edge_weight: dict[tuple[str, str], int]  # (item, user) -> scaled weight
    total_capacity: int
    item_terminal: int = 0
    user_terminal: int = 0
    eq_item: int = 0
    eq_user: int = 0


@dataclass
class SubgraphRecord:
    iteration: int
    pairs: list[tuple[str, str, int]] = field(default_factory=list)  # (item, user, weight)

    @property
    def items(self) -> list[str]:
        return list(dict.fromkeys(item for item, _, _ in self.pairs))


@dataclass
class CandidateSet:
    per_user: dict[str, list[str]]
    records: list[SubgraphRecord]
    iterations: int
    hit_iteration_cap: bool = False


def normalize_degrees(degrees: Mapping[str, int], t: int) -> dict[str, float]:
    """Min-max map item degrees onto ``[1, t]``; equal degrees all map to 1."""
    lo, hi = min(degrees.values()), max(degrees.values())
    if hi == lo:
        return {item: 1.0 for item in degrees}
    span = (t - 1) / (hi - lo)
    return {item: 1.0 + (d - lo) * span for item, d in degrees.items()}


def scale_weight(raw: float, weight_scale: int) -> int:
    """Round half up to an integer number of flow units, never below 1."""
    return max(1, math.floor(raw * weight_scale + 0.5))


def compute_edge_weights(
    recs: RecommendationTable, cfg: FairMatchConfig, degrees: Mapping[str, float]
) -> WeightAssignment:
    """``alpha * degree + (1 - alpha) * rank`` per recommended pair, scaled to integers.

    ``degrees`` must already be normalized; pairs whose item is not in it
    (removed in an earlier round) are skipped.
    """
    weights: dict[tuple[str, str], int] = {}
    for user, entries in recs.lists.items():
        for e in entries:
            if e.item not in degrees:
                continue
            if not 1 <= e.rank <= cfg.t:
                raise InputError(f"rank {e.rank} of item {e.item!r} for user {user!r} outside 1..{cfg.t}")
            pair = (e.item, user)
            raw = cfg.alpha * degrees[e.item] + (1.0 - cfg.alpha) * e.rank
            w = scale_weight(raw, cfg.weight_scale)
            # a pair listed twice keeps its smaller weight
            if pair not in weights or w < weights[pair]:
                weights[pair] = w
    return WeightAssignment(edge_weight=weights, total_capacity=sum(weights.values()))


def compute_terminal_weights(wa: WeightAssignment, num_items: int, num_users: int) -> WeightAssignment:
    if num_items <= 0 or num_users <= 0:
        raise InputError("need at least one item and one user")
    if wa.total_capacity <= 0:
        raise InputError("total capacity must be positive")
    eq_item = -(-wa.total_capacity // num_items)
    eq_user = -(-wa.total_capacity // num_users)
    g = math.gcd(eq_item, eq_user)
    # both quotients are exact, so the outer ceilings are no-ops
    return replace(
        wa,
        eq_item=eq_item,
        eq_user=eq_user,
        item_terminal=min(eq_item // g, eq_user // g),
        user_terminal=eq_item // g,
    )


def compute_weights(net: FlowNetwork, recs: RecommendationTable, cfg: FairMatchConfig) -> WeightAssignment:
    """Edge and terminal weights for the items and users currently in ``net``."""
    degrees = {item.key: net.item_degree(item) for item in net.items}
    wa = compute_edge_weights(recs, cfg, normalize_degrees(degrees, cfg.t))
    return compute_terminal_weights(wa, len(net.items), len(net.users))


def apply_weights(net: FlowNetwork, wa: WeightAssignment) -> FlowNetwork:
    caps: dict[tuple[int, int], int] = {}
    source, sink = net.source.id, net.sink.id
    for item in net.items:
        caps[(source, item.id)] = wa.item_terminal
    for user in net.users:
        caps[(user.id, sink)] = wa.user_terminal
    for (item, user), w in wa.edge_weight.items():
        caps[(net.item(item).id, net.user(user).id)] = w
    return net.with_capacities(caps)


def selection_threshold(net: FlowNetwork) -> int:
    return len(net.items) + len(net.users) + 2


def select_candidates(result: MaxFlowResult, net: FlowNetwork, iteration: int = 0) -> SubgraphRecord:
    """Pairs of every item whose final label reached the source label."""
    threshold = selection_threshold(net)
    record = SubgraphRecord(iteration)
    for item in net.items:
        if result.labels[item.id] >= threshold:
            for a in net.out_arcs[item.id]:
                arc = net.arcs[a]
                record.pairs.append((item.key, net.nodes[arc.head].key, arc.capacity))
    return record


def fairmatch_iterate(
    recs: RecommendationTable,
    cfg: FairMatchConfig,
    on_iteration: Callable[[FlowNetwork, MaxFlowResult, SubgraphRecord], None] | None = None,
) -> CandidateSet:
    """Run extraction rounds until one selects nothing or no items remain.

    ``on_iteration`` sees each round's weighted network, solver result and
    record before the selected items are removed.
    """
    t = recs.t
    if t != cfg.t:
        raise InputError(f"lists have length {t} but the configuration says t={cfg.t}")

    placeholder = WeightAssignment(
        edge_weight={(e.item, u): 1 for u, entries in recs.lists.items() for e in entries},
        total_capacity=0,
        item_terminal=1,
        user_terminal=1,
    )
    net = build_network(recs, placeholder)
    limit = cfg.max_iterations or len(net.items)

    records: list[SubgraphRecord] = []
    capped = False
    iteration = 0
    while net.items:
        if iteration == limit:
            capped = True
            log.warning("stopped after %d iterations with %d items left", limit, len(net.items))
            break
        weighted = apply_weights(net, compute_weights(net, recs, cfg))
        result = run_push_relabel(weighted)
        record = select_candidates(result, weighted, iteration)
        if on_iteration is not None:
            on_iteration(weighted, result, record)
        iteration += 1
        if not record.pairs:
            break
        records.append(record)
        net = remove_items(net, [net.item(key) for key in record.items])

    ranked: dict[str, list[tuple[int, str, int]]] = {user: [] for user in recs.lists}
    for record in records:
        for item, user, weight in record.pairs:
            ranked[user].append((weight, item, record.iteration))
    per_user = {user: [item for _, item, _ in sorted(cands)] for user, cands in ranked.items()}
    return CandidateSet(per_user=per_user, records=records, iterations=iteration, hit_iteration_cap=capped)


def visibility_counts(lists: Mapping[str, Sequence[str]]) -> Counter:
    """Number of lists containing each item; missing items read as 0."""
    counts: Counter = Counter()
    for items in lists.values():
        counts.update(set(items))
    return counts


def reconstruct_list(
    top_n: Sequence[str], candidates: Sequence[str], vis: Mapping[str, int], n: int
) -> list[str]:
    """Swap the most visible items of ``top_n`` for FairMatch candidates.

    ``top_n`` is ordered by ascending visibility (stable on original rank),
    the last ``k`` entries are dropped and the first ``k`` candidates not
    already present are appended, where ``k = min(n, #candidates)``.
    """
    if len(top_n) != n:
        raise InputError(f"expected a list of {n} items, got {len(top_n)}")
    present = set(top_n)
    fresh = [c for c in dict.fromkeys(candidates) if c not in present]
    k = min(n, len(fresh))
    if k == 0:
        return list(top_n)
    order = sorted(range(n), key=lambda r: (vis.get(top_n[r], 0), r))
    return [top_n[r] for r in order[: n - k]] + fresh[:k]


def fairmatch_rerank(recs: RecommendationTable, cfg: FairMatchConfig) -> dict[str, list[str]]:
    """Final top-``n`` lists for every user."""
    cands = fairmatch_iterate(recs, cfg)
    top = {user: recs.ranked_items(user)[: cfg.n] for user in recs.lists}
    vis = visibility_counts(top)
    return {user: reconstruct_list(top[user], cands.per_user[user], vis, cfg.n) for user in recs.lists}
