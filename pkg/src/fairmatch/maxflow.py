"""FIFO push-relabel maximum flow, plus a breadth-first augmenting-path oracle.

On layered FairMatch networks the preflow uses the fixed labelling
source = |I| + |U| + 2, items = 2, users = 1, sink = 0. Items that cannot
route their source capacity to the sink must be relabelled above the
source to hand the excess back, so their final label marks them as
under-served. Other graphs fall back to the textbook labelling (source =
node count, everything else 0).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .errors import SolverError
from .network import FlowNetwork, NodeKind

# (neighbour, arc index, True if the arc leaves this node)
Residual = tuple[int, int, bool]


@dataclass
class PushRelabelState:
    label: list[int]
    excess: list[int]
    flow: list[int]
    active: deque[int]
    queued: list[bool]
    adjacency: dict[int, list[Residual]]
    current: list[int]
    label_limit: int
    trace: list[tuple] | None = None
    pushes: int = 0
    relabels: int = 0

    def residual(self, net: FlowNetwork, arc: int, forward: bool) -> int:
        return net.arcs[arc].capacity - self.flow[arc] if forward else self.flow[arc]


@dataclass
class MaxFlowResult:
    value: int
    labels: list[int]
    flows: list[int]
    pushes: int = 0
    relabels: int = 0
    trace: list[tuple] | None = field(default=None, repr=False)

    def label_of(self, node) -> int:
        return self.labels[getattr(node, "id", node)]


def _residual_adjacency(net: FlowNetwork) -> dict[int, list[Residual]]:
    adj: dict[int, list[Residual]] = {v: [] for v in net.nodes}
    for idx, arc in enumerate(net.arcs):
        adj[arc.tail].append((arc.head, idx, True))
        adj[arc.head].append((arc.tail, idx, False))
    for entries in adj.values():
        entries.sort()
    return adj


def preflow_init(net: FlowNetwork, trace: bool = False) -> PushRelabelState:
    """Initial labels, saturated source arcs and the FIFO of active nodes."""
    size = net.size
    source, sink = net.source.id, net.sink.id
    label = [0] * size
    if net.is_layered():
        for node in net.nodes.values():
            if node.kind is NodeKind.ITEM:
                label[node.id] = 2
            elif node.kind is NodeKind.USER:
                label[node.id] = 1
        label[source] = len(net.items) + len(net.users) + 2
    else:
        label[source] = net.num_nodes

    state = PushRelabelState(
        label=label,
        excess=[0] * size,
        flow=[0] * len(net.arcs),
        active=deque(),
        queued=[False] * size,
        adjacency=_residual_adjacency(net),
        current=[0] * size,
        label_limit=2 * net.num_nodes,
        trace=[] if trace else None,
    )
    for idx in sorted(net.out_arcs[source], key=lambda a: net.arcs[a].head):
        arc = net.arcs[idx]
        state.flow[idx] = arc.capacity
        state.excess[arc.head] += arc.capacity
        if state.trace is not None:
            state.trace.append(("push", source, arc.head, arc.capacity))
        _activate(state, arc.head, source, sink)
    return state


def _activate(state: PushRelabelState, v: int, source: int, sink: int) -> None:
    if v != source and v != sink and not state.queued[v] and state.excess[v] > 0:
        state.queued[v] = True
        state.active.append(v)


def _push_along(state: PushRelabelState, net: FlowNetwork, u: int, v: int, arc: int, forward: bool) -> int:
    delta = min(state.excess[u], state.residual(net, arc, forward))
    if forward:
        state.flow[arc] += delta
    else:
        state.flow[arc] -= delta
    state.excess[u] -= delta
    state.excess[v] += delta
    state.pushes += 1
    if state.trace is not None:
        state.trace.append(("push", u, v, delta))
    _activate(state, v, net.source.id, net.sink.id)
    return delta


def push(state: PushRelabelState, net: FlowNetwork, u, v) -> int:
    """Move ``min(excess(u), residual(u, v))`` from ``u`` to ``v``; return the amount."""
    u, v = getattr(u, "id", u), getattr(v, "id", v)
    if state.excess[u] <= 0:
        raise SolverError(f"push from node {u} without excess")
    if state.label[u] != state.label[v] + 1:
        raise SolverError(f"push {u}->{v} is not admissible (labels {state.label[u]}, {state.label[v]})")
    arc = net.arc_between(u, v)
    if arc is not None and net.arcs[arc].capacity - state.flow[arc] > 0:
        return _push_along(state, net, u, v, arc, True)
    arc = net.arc_between(v, u)
    if arc is not None and state.flow[arc] > 0:
        return _push_along(state, net, u, v, arc, False)
    raise SolverError(f"no residual capacity from {u} to {v}")


def relabel(state: PushRelabelState, net: FlowNetwork, u) -> int:
    """Lift ``u`` to one above its lowest residual neighbour; return the new label."""
    u = getattr(u, "id", u)
    if state.excess[u] <= 0:
        raise SolverError(f"relabel of node {u} without excess")
    lowest = None
    for v, arc, forward in state.adjacency[u]:
        if state.residual(net, arc, forward) > 0:
            if state.label[v] < state.label[u]:
                raise SolverError(f"relabel of node {u} with admissible neighbour {v}")
            if lowest is None or state.label[v] < lowest:
                lowest = state.label[v]
    if lowest is None:
        raise SolverError(f"node {u} has excess {state.excess[u]} but no residual arcs")
    new = lowest + 1
    if new > state.label_limit:
        raise SolverError(f"label of node {u} exceeded {state.label_limit}")
    if state.trace is not None:
        state.trace.append(("relabel", u, state.label[u], new))
    state.label[u] = new
    state.relabels += 1
    return new


def discharge(state: PushRelabelState, net: FlowNetwork, u: int) -> None:
    adj = state.adjacency[u]
    label, flow, arcs = state.label, state.flow, net.arcs
    while state.excess[u] > 0:
        i = state.current[u]
        if i == len(adj):
            relabel(state, net, u)
            state.current[u] = 0
            continue
        v, arc, forward = adj[i]
        if label[u] == label[v] + 1:
            residual = arcs[arc].capacity - flow[arc] if forward else flow[arc]
            if residual > 0:
                _push_along(state, net, u, v, arc, forward)
                continue
        state.current[u] = i + 1


def run_push_relabel(net: FlowNetwork, trace: bool = False) -> MaxFlowResult:
    state = preflow_init(net, trace=trace)
    while state.active:
        u = state.active.popleft()
        state.queued[u] = False
        discharge(state, net, u)

    sink = net.sink.id
    for v in net.nodes:
        if v not in (net.source.id, sink) and state.excess[v] != 0:
            raise SolverError(f"node {v} finished with excess {state.excess[v]}")
    value = sum(state.flow[a] for a in net.in_arcs[sink]) - sum(state.flow[a] for a in net.out_arcs[sink])
    if value != state.excess[sink]:
        raise SolverError(f"sink inflow {value} disagrees with sink excess {state.excess[sink]}")
    return MaxFlowResult(
        value=value,
        labels=state.label,
        flows=state.flow,
        pushes=state.pushes,
        relabels=state.relabels,
        trace=state.trace,
    )


def max_flow_reference(net: FlowNetwork) -> int:
    """Maximum flow by shortest augmenting paths (Edmonds-Karp).

    Kept deliberately separate from the push-relabel code; tests use it as
    an oracle.
    """
    source, sink = net.source.id, net.sink.id
    residual: dict[int, dict[int, int]] = {v: {} for v in net.nodes}
    for arc in net.arcs:
        residual[arc.tail][arc.head] = residual[arc.tail].get(arc.head, 0) + arc.capacity
        residual[arc.head].setdefault(arc.tail, 0)

    total = 0
    while True:
        parent = {source: source}
        queue = deque([source])
        while queue and sink not in parent:
            x = queue.popleft()
            for y, cap in residual[x].items():
                if cap > 0 and y not in parent:
                    parent[y] = x
                    queue.append(y)
        if sink not in parent:
            return total
        bottleneck = None
        y = sink
        while y != source:
            x = parent[y]
            cap = residual[x][y]
            bottleneck = cap if bottleneck is None else min(bottleneck, cap)
            y = x
        y = sink
        while y != source:
            x = parent[y]
            residual[x][y] -= bottleneck
            residual[y][x] += bottleneck
            y = x
        total += bottleneck
