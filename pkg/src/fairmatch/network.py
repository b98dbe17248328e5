"""Capacitated user-item flow network with a source and a sink.

Node handles are dense integers: the source is 0, the sink is 1, items and
users follow. Handles never change when items are removed, so per-node
arrays sized by :attr:`FlowNetwork.size` stay valid across iterations.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Mapping

from .errors import NetworkError

if TYPE_CHECKING:
    from .algorithm import WeightAssignment
    from .ingest import RecommendationTable

SOURCE_ID = 0
SINK_ID = 1


class NodeKind(enum.Enum):
    SOURCE = "source"
    SINK = "sink"
    ITEM = "item"
    USER = "user"


@dataclass(frozen=True)
class NodeRef:
    id: int
    kind: NodeKind
    key: str | None = None

    def __repr__(self) -> str:
        if self.key is None:
            return f"<{self.kind.value}#{self.id}>"
        return f"<{self.kind.value} {self.key!r}#{self.id}>"


@dataclass(frozen=True)
class Arc:
    tail: int
    head: int
    capacity: int


class FlowNetwork:
    """Directed graph of capacitated arcs.

    The constructor accepts any arc set so the solvers can be exercised on
    arbitrary graphs; :meth:`validate` checks the source -> item -> user ->
    sink layering that FairMatch relies on.
    """

    def __init__(self, nodes: Iterable[NodeRef], arcs: Iterable[Arc]):
        self.nodes: dict[int, NodeRef] = {}
        for node in sorted(nodes, key=lambda nd: nd.id):
            if node.id in self.nodes:
                raise NetworkError(f"duplicate node handle {node.id}")
            self.nodes[node.id] = node
        if SOURCE_ID not in self.nodes or self.nodes[SOURCE_ID].kind is not NodeKind.SOURCE:
            raise NetworkError("node 0 must be the source")
        if SINK_ID not in self.nodes or self.nodes[SINK_ID].kind is not NodeKind.SINK:
            raise NetworkError("node 1 must be the sink")

        self.arcs: list[Arc] = list(arcs)
        self.size = max(self.nodes) + 1
        self._arc_index: dict[tuple[int, int], int] = {}
        self.out_arcs: dict[int, list[int]] = {v: [] for v in self.nodes}
        self.in_arcs: dict[int, list[int]] = {v: [] for v in self.nodes}
        for idx, arc in enumerate(self.arcs):
            if arc.tail not in self.nodes or arc.head not in self.nodes:
                raise NetworkError(f"arc {arc.tail}->{arc.head} references an unknown node")
            if arc.tail == arc.head:
                raise NetworkError(f"self-loop on node {arc.tail}")
            if not isinstance(arc.capacity, int) or arc.capacity < 0:
                raise NetworkError(
                    f"arc {arc.tail}->{arc.head} capacity must be a non-negative int, "
                    f"got {arc.capacity!r}"
                )
            if (arc.tail, arc.head) in self._arc_index:
                raise NetworkError(f"parallel arc {arc.tail}->{arc.head}")
            self._arc_index[(arc.tail, arc.head)] = idx
            self.out_arcs[arc.tail].append(idx)
            self.in_arcs[arc.head].append(idx)

        self._item_by_key = {nd.key: nd for nd in self.nodes.values() if nd.kind is NodeKind.ITEM}
        self._user_by_key = {nd.key: nd for nd in self.nodes.values() if nd.kind is NodeKind.USER}

    @classmethod
    def from_bipartite(
        cls,
        item_capacity: Mapping[str, int],
        edge_capacity: Mapping[tuple[str, str], int],
        user_capacity: Mapping[str, int],
    ) -> FlowNetwork:
        """Build a layered network from per-terminal and per-edge capacities.

        Item and user handles follow the iteration order of the mappings.
        ``edge_capacity`` is keyed by ``(item, user)``.
        """
        nodes = [NodeRef(SOURCE_ID, NodeKind.SOURCE), NodeRef(SINK_ID, NodeKind.SINK)]
        item_ids: dict[str, int] = {}
        user_ids: dict[str, int] = {}
        for key in item_capacity:
            item_ids[key] = len(nodes)
            nodes.append(NodeRef(len(nodes), NodeKind.ITEM, key))
        for key in user_capacity:
            user_ids[key] = len(nodes)
            nodes.append(NodeRef(len(nodes), NodeKind.USER, key))

        arcs = [Arc(SOURCE_ID, item_ids[key], cap) for key, cap in item_capacity.items()]
        for (item, user), cap in edge_capacity.items():
            if item not in item_ids:
                raise NetworkError(f"edge references unknown item {item!r}")
            if user not in user_ids:
                raise NetworkError(f"edge references unknown user {user!r}")
            arcs.append(Arc(item_ids[item], user_ids[user], cap))
        arcs.extend(Arc(user_ids[key], SINK_ID, cap) for key, cap in user_capacity.items())
        return cls(nodes, arcs)

    # -- lookup ---------------------------------------------------------------

    @property
    def source(self) -> NodeRef:
        return self.nodes[SOURCE_ID]

    @property
    def sink(self) -> NodeRef:
        return self.nodes[SINK_ID]

    @property
    def items(self) -> list[NodeRef]:
        return [nd for nd in self.nodes.values() if nd.kind is NodeKind.ITEM]

    @property
    def users(self) -> list[NodeRef]:
        return [nd for nd in self.nodes.values() if nd.kind is NodeKind.USER]

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    def item(self, key: str) -> NodeRef:
        try:
            return self._item_by_key[key]
        except KeyError:
            raise NetworkError(f"unknown item {key!r}") from None

    def user(self, key: str) -> NodeRef:
        try:
            return self._user_by_key[key]
        except KeyError:
            raise NetworkError(f"unknown user {key!r}") from None

    def arc_between(self, tail: int, head: int) -> int | None:
        return self._arc_index.get((tail, head))

    def capacity(self, tail: int, head: int) -> int:
        idx = self._arc_index.get((tail, head))
        return 0 if idx is None else self.arcs[idx].capacity

    def item_users(self, item: NodeRef) -> list[NodeRef]:
        return [self.nodes[self.arcs[a].head] for a in self.out_arcs[item.id]]

    def item_degree(self, item: NodeRef) -> int:
        """Number of item -> user arcs leaving ``item``."""
        if self.nodes.get(item.id) != item or item.kind is not NodeKind.ITEM:
            raise NetworkError(f"{item!r} is not an item node of this network")
        return len(self.out_arcs[item.id])

    def item_user_arcs(self) -> list[Arc]:
        return [a for a in self.arcs if self.nodes[a.tail].kind is NodeKind.ITEM]

    # -- derived networks -----------------------------------------------------

    def with_capacities(self, capacity: Mapping[tuple[int, int], int]) -> FlowNetwork:
        """Same topology with capacities replaced; missing arcs keep theirs."""
        arcs = [Arc(a.tail, a.head, capacity.get((a.tail, a.head), a.capacity)) for a in self.arcs]
        return FlowNetwork(self.nodes.values(), arcs)

    def validate(self) -> None:
        """Raise :class:`NetworkError` unless the network is source -> item -> user -> sink layered."""
        allowed = {
            (NodeKind.SOURCE, NodeKind.ITEM),
            (NodeKind.ITEM, NodeKind.USER),
            (NodeKind.USER, NodeKind.SINK),
        }
        kinds = [nd.kind for nd in self.nodes.values()]
        if kinds.count(NodeKind.SOURCE) != 1 or kinds.count(NodeKind.SINK) != 1:
            raise NetworkError("exactly one source and one sink required")
        for arc in self.arcs:
            pair = (self.nodes[arc.tail].kind, self.nodes[arc.head].kind)
            if pair not in allowed:
                raise NetworkError(
                    f"arc {arc.tail}->{arc.head} joins {pair[0].value} to {pair[1].value}"
                )
        for nd in self.nodes.values():
            if nd.kind is NodeKind.ITEM and len(self.in_arcs[nd.id]) != 1:
                raise NetworkError(f"item {nd.key!r} needs exactly one source arc")
            if nd.kind is NodeKind.USER and len(self.out_arcs[nd.id]) != 1:
                raise NetworkError(f"user {nd.key!r} needs exactly one sink arc")
        if len(self._item_by_key) != kinds.count(NodeKind.ITEM):
            raise NetworkError("item keys are not unique")
        if len(self._user_by_key) != kinds.count(NodeKind.USER):
            raise NetworkError("user keys are not unique")

    def is_layered(self) -> bool:
        try:
            self.validate()
        except NetworkError:
            return False
        return True

    def __repr__(self) -> str:
        return (
            f"FlowNetwork(items={len(self._item_by_key)}, users={len(self._user_by_key)}, "
            f"arcs={len(self.arcs)})"
        )


def build_network(recs: RecommendationTable, weights: WeightAssignment) -> FlowNetwork:
    """Bipartite network for ``recs`` with capacities from ``weights``.

    Items get handles in order of first appearance (users in table order,
    entries in rank order). A pair listed twice for one user yields one arc.
    """
    if not recs.lists:
        raise NetworkError("recommendation table is empty")
    if weights.item_terminal <= 0 or weights.user_terminal <= 0:
        raise NetworkError("weights carry no terminal capacities")

    items: dict[str, int] = {}
    edges: dict[tuple[str, str], int] = {}
    for user, entries in recs.lists.items():
        for entry in sorted(entries, key=lambda e: e.rank):
            pair = (entry.item, user)
            if pair in edges:
                continue
            try:
                edges[pair] = weights.edge_weight[pair]
            except KeyError:
                raise NetworkError(f"no weight for item {entry.item!r} / user {user!r}") from None
            items.setdefault(entry.item, weights.item_terminal)
    users = {user: weights.user_terminal for user in recs.lists}
    return FlowNetwork.from_bipartite(items, edges, users)


def remove_items(net: FlowNetwork, items: Iterable[NodeRef]) -> FlowNetwork:
    """Drop item nodes with their source arc and user arcs. Users stay."""
    doomed = set()
    for item in items:
        if net.nodes.get(item.id) != item or item.kind is not NodeKind.ITEM:
            raise NetworkError(f"{item!r} is not an item node of this network")
        doomed.add(item.id)
    if not doomed:
        return net
    nodes = [nd for nd in net.nodes.values() if nd.id not in doomed]
    arcs = [a for a in net.arcs if a.tail not in doomed and a.head not in doomed]
    return FlowNetwork(nodes, arcs)
