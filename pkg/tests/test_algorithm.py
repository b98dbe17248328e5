import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairmatch.algorithm import (
    FairMatchConfig,
    WeightAssignment,
    apply_weights,
    compute_edge_weights,
    compute_terminal_weights,
    compute_weights,
    fairmatch_iterate,
    fairmatch_rerank,
    normalize_degrees,
    reconstruct_list,
    select_candidates,
    visibility_counts,
)
from fairmatch.errors import InputError
from fairmatch.ingest import RecEntry, RecommendationTable, generate_synthetic
from fairmatch.maxflow import max_flow_reference, run_push_relabel
from fairmatch.network import FlowNetwork, build_network

from netutil import sink_reachable

# Round 1 selects i3, i0 (label 12 >= 11); round 2 selects i2, i1 with label
# 10, which only clears the threshold computed on the shrunken graph (9).
THRESHOLD_CASE = {
    "u0": ["i2", "i4", "i3"],
    "u1": ["i1", "i4", "i2"],
    "u2": ["i1", "i4", "i2"],
    "u3": ["i1", "i4", "i0"],
}


def single_pair_recs(rank, t=5):
    items = [f"x{k}" for k in range(t)]
    items[rank - 1] = "target"
    return RecommendationTable.from_ranked({"u": items})


# -- degree normalisation ----------------------------------------------------

def test_normalize_endpoints():
    assert normalize_degrees({"a": 2, "b": 6}, 10) == {"a": 1.0, "b": 10.0}


def test_normalize_midpoint():
    assert normalize_degrees({"a": 2, "b": 4, "c": 6}, 10) == {"a": 1.0, "b": 5.5, "c": 10.0}


def test_normalize_degenerate():
    assert normalize_degrees({"a": 3, "b": 3}, 10) == {"a": 1.0, "b": 1.0}


# -- edge weights --------------------------------------------------------------

def test_edge_weight_mixed():
    cfg = FairMatchConfig(alpha=0.5, t=5, n=2, weight_scale=1)
    wa = compute_edge_weights(single_pair_recs(3), cfg, {"target": 5.0})
    assert wa.edge_weight == {("target", "u"): 4}
    assert wa.total_capacity == 4


@pytest.mark.parametrize("rank", [1, 2, 5])
def test_edge_weight_accuracy_only(rank):
    cfg = FairMatchConfig(alpha=0.0, t=5, n=2, weight_scale=1)
    wa = compute_edge_weights(single_pair_recs(rank), cfg, {"target": 4.0})
    assert wa.edge_weight[("target", "u")] == rank


def test_edge_weight_visibility_only():
    cfg = FairMatchConfig(alpha=1.0, t=5, n=2, weight_scale=100)
    wa = compute_edge_weights(single_pair_recs(2), cfg, {"target": 3.25})
    assert wa.edge_weight[("target", "u")] == 325


def test_edge_weight_rounds_half_up_and_floors_at_one():
    cfg = FairMatchConfig(alpha=0.5, t=5, n=2, weight_scale=1)
    # 0.5 * 1 + 0.5 * 2 = 1.5 -> 2
    assert compute_edge_weights(single_pair_recs(2), cfg, {"target": 1.0}).edge_weight[("target", "u")] == 2
    cfg = FairMatchConfig(alpha=1.0, t=5, n=2, weight_scale=1)
    assert compute_edge_weights(single_pair_recs(2), cfg, {"target": 0.2}).edge_weight[("target", "u")] == 1


def test_edge_weight_rank_out_of_range():
    recs = RecommendationTable({"u": [RecEntry("a", 7, 1.0)]})
    with pytest.raises(InputError):
        compute_edge_weights(recs, FairMatchConfig(t=5, n=2), {"a": 1.0})


def test_edge_weights_skip_removed_items():
    recs = RecommendationTable.from_ranked({"u": ["a", "b", "c"]})
    wa = compute_edge_weights(recs, FairMatchConfig(t=3, n=1, weight_scale=1, alpha=0), {"a": 1.0, "c": 1.0})
    assert wa.edge_weight == {("a", "u"): 1, ("c", "u"): 3}


@settings(max_examples=200, deadline=None)
@given(
    alpha=st.floats(0, 1),
    d1=st.floats(1, 30),
    d2=st.floats(1, 30),
    r1=st.integers(1, 30),
    r2=st.integers(1, 30),
    scale=st.integers(1, 1000),
)
def test_weight_monotonicity(alpha, d1, d2, r1, r2, scale):
    cfg = FairMatchConfig(alpha=alpha, t=30, n=1, weight_scale=scale)

    def weight(d, r):
        items = [f"x{k}" for k in range(30)]
        items[r - 1] = "target"
        recs = RecommendationTable.from_ranked({"u": items})
        return compute_edge_weights(recs, cfg, {"target": d}).edge_weight[("target", "u")]

    lo, hi = sorted((d1, d2))
    assert weight(lo, r1) <= weight(hi, r1) + 1
    if alpha < 1:
        lo, hi = sorted((r1, r2))
        assert weight(d1, lo) <= weight(d1, hi) + 1


# -- terminal weights ----------------------------------------------------------

def test_terminal_weights_coprime():
    wa = compute_terminal_weights(WeightAssignment({}, 100), 8, 10)
    assert (wa.eq_item, wa.eq_user) == (13, 10)
    assert (wa.item_terminal, wa.user_terminal) == (10, 13)


def test_terminal_weights_symmetric():
    wa = compute_terminal_weights(WeightAssignment({}, 50), 5, 5)
    assert (wa.eq_item, wa.eq_user) == (10, 10)
    assert (wa.item_terminal, wa.user_terminal) == (1, 1)


def test_terminal_weights_common_divisor():
    wa = compute_terminal_weights(WeightAssignment({}, 12), 3, 6)
    assert (wa.eq_item, wa.eq_user) == (4, 2)
    assert (wa.item_terminal, wa.user_terminal) == (1, 2)


def test_terminal_weights_bad_counts():
    with pytest.raises(InputError):
        compute_terminal_weights(WeightAssignment({}, 12), 0, 6)
    with pytest.raises(InputError):
        compute_terminal_weights(WeightAssignment({}, 0), 3, 6)


def test_total_capacity_is_edge_sum():
    recs = generate_synthetic(30, 20, 6, 1.0, seed=2)
    cfg = FairMatchConfig(alpha=0.3, t=6, n=3)
    placeholder = WeightAssignment({(e.item, u): 1 for u, es in recs.lists.items() for e in es}, 0, 1, 1)
    net = build_network(recs, placeholder)
    wa = compute_weights(net, recs, cfg)
    assert wa.total_capacity == sum(wa.edge_weight.values())
    weighted = apply_weights(net, wa)
    weighted.validate()
    caps = {weighted.arcs[a].capacity for a in weighted.out_arcs[weighted.source.id]}
    assert caps == {wa.item_terminal}


# -- candidate selection -------------------------------------------------------

def test_select_nothing_when_everything_drains():
    net = FlowNetwork.from_bipartite({"a": 3, "b": 3}, {("a", "x"): 5, ("b", "y"): 5}, {"x": 5, "y": 5})
    record = select_candidates(run_push_relabel(net), net)
    assert record.pairs == []


def test_select_item_with_capacity_deficit():
    net = FlowNetwork.from_bipartite(
        {"u": 15, "ok": 2}, {("u", "v"): 8, ("u", "k"): 4, ("ok", "k"): 5}, {"v": 20, "k": 20}
    )
    record = select_candidates(run_push_relabel(net), net, iteration=4)
    assert record.iteration == 4
    assert sorted(record.pairs) == [("u", "k", 4), ("u", "v", 8)]


def test_threshold_uses_current_graph():
    recs = RecommendationTable.from_ranked(THRESHOLD_CASE)
    cfg = FairMatchConfig(alpha=1.0, t=3, n=2, weight_scale=1)
    rounds = []

    def spy(net, result, record):
        labels = {item.key: result.labels[item.id] for item in net.items}
        rounds.append((len(net.items) + len(net.users) + 2, labels, record.items))

    cands = fairmatch_iterate(recs, cfg, on_iteration=spy)
    original = 5 + 4 + 2
    assert [r[2] for r in rounds] == [["i3", "i0"], ["i2", "i1"], []]
    assert rounds[0][0] == original
    threshold, labels, _ = rounds[1]
    assert threshold == 3 + 4 + 2
    for item in ("i2", "i1"):
        assert threshold <= labels[item] < original
    assert cands.iterations == 3
    assert cands.per_user == {"u0": ["i2", "i3"], "u1": ["i1", "i2"], "u2": ["i1", "i2"], "u3": ["i0", "i1"]}
    final = fairmatch_rerank(recs, cfg)
    assert final == {"u0": ["i2", "i3"], "u1": ["i1", "i2"], "u2": ["i1", "i2"], "u3": ["i1", "i0"]}


def test_threshold_case_first_round_weights():
    # degrees 3,4,1,3,1 -> normalised 7/3, 3, 1, 7/3, 1 -> weights 2, 3, 1, 2, 1
    recs = RecommendationTable.from_ranked(THRESHOLD_CASE)
    cfg = FairMatchConfig(alpha=1.0, t=3, n=2, weight_scale=1)
    placeholder = WeightAssignment({(e.item, u): 1 for u, es in recs.lists.items() for e in es}, 0, 1, 1)
    wa = compute_weights(build_network(recs, placeholder), recs, cfg)
    assert wa.total_capacity == 26
    assert (wa.eq_item, wa.eq_user, wa.item_terminal, wa.user_terminal) == (6, 7, 6, 6)


def test_equal_degrees_visibility_only():
    # every item has degree 1; each user can take one unit but is offered two
    recs = RecommendationTable.from_ranked({"u0": ["a", "b"], "u1": ["c", "d"]})
    cfg = FairMatchConfig(alpha=1.0, t=2, n=1, weight_scale=1)
    rounds = []
    cands = fairmatch_iterate(recs, cfg, on_iteration=lambda n, r, rec: rounds.append((n, r, rec)))
    net, result, record = rounds[0]
    weights = {net.arcs[a].capacity for item in net.items for a in net.out_arcs[item.id]}
    assert weights == {1}
    supply = sum(net.arcs[a].capacity for a in net.out_arcs[net.source.id])
    assert supply - max_flow_reference(net) == 2
    # both user->sink arcs are full in every max flow, so no item can reach the sink
    reach = sink_reachable(net, result.flows)
    blocked = {i.key for i in net.items if i.id not in reach}
    assert blocked == {"a", "b", "c", "d"}
    assert set(record.items) == blocked
    assert cands.iterations == 1
    assert cands.per_user == {"u0": ["a", "b"], "u1": ["c", "d"]}
    # "a" is already listed, so the fresh candidate "b" takes its slot
    assert fairmatch_rerank(recs, cfg) == {"u0": ["b"], "u1": ["d"]}


def test_selected_items_cannot_reach_sink():
    for seed in range(40):
        rng = random.Random(seed)
        recs = generate_synthetic(rng.randint(2, 25), rng.randint(4, 20), 4, rng.uniform(0, 1.5), seed)
        cfg = FairMatchConfig(alpha=rng.choice([0, 0.25, 0.5, 0.75, 1]), t=4, n=2, weight_scale=rng.choice([1, 10, 100]))

        def check(net, result, record):
            reach = sink_reachable(net, result.flows)
            threshold = len(net.items) + len(net.users) + 2
            for item in record.items:
                node = net.item(item)
                assert result.labels[node.id] >= threshold
                assert node.id not in reach
                # an item with more supply than outgoing capacity is always caught
            for item in net.items:
                out = sum(net.arcs[a].capacity for a in net.out_arcs[item.id])
                supply = net.arcs[net.in_arcs[item.id][0]].capacity
                if supply > out:
                    assert item.key in record.items

        fairmatch_iterate(recs, cfg, on_iteration=check)


# -- iteration loop ------------------------------------------------------------

def test_empty_first_selection_keeps_top_n():
    recs = RecommendationTable.from_ranked({"u0": ["a", "b"], "u1": ["b", "a"]})
    cfg = FairMatchConfig(alpha=1.0, t=2, n=1, weight_scale=1)
    cands = fairmatch_iterate(recs, cfg)
    assert cands.records == [] and cands.iterations == 1
    assert fairmatch_rerank(recs, cfg) == {"u0": ["a"], "u1": ["b"]}


def test_t_mismatch():
    recs = RecommendationTable.from_ranked({"u0": ["a", "b", "c"]})
    with pytest.raises(InputError):
        fairmatch_iterate(recs, FairMatchConfig(t=4, n=2))


def test_iteration_cap_reports_partial_result(caplog):
    recs = RecommendationTable.from_ranked(THRESHOLD_CASE)
    cfg = FairMatchConfig(alpha=1.0, t=3, n=2, weight_scale=1, max_iterations=1)
    cands = fairmatch_iterate(recs, cfg)
    assert cands.hit_iteration_cap
    assert [r.items for r in cands.records] == [["i3", "i0"]]
    assert "stopped after 1 iterations" in caplog.text


def test_config_validation():
    with pytest.raises(InputError):
        FairMatchConfig(alpha=1.5)
    with pytest.raises(InputError):
        FairMatchConfig(t=10, n=10)
    with pytest.raises(InputError):
        FairMatchConfig(weight_scale=0)


@pytest.mark.parametrize("seed", range(12))
def test_iterate_structure(seed):
    rng = random.Random(seed)
    t = rng.randint(3, 12)
    n = rng.randint(1, t - 1)
    recs = generate_synthetic(rng.randint(5, 60), rng.randint(t, 40), t, rng.uniform(0, 2), seed)
    cfg = FairMatchConfig(alpha=rng.choice([0, 0.25, 0.5, 0.75, 1]), t=t, n=n)
    cands = fairmatch_iterate(recs, cfg)
    assert cands.iterations <= len(recs.items)
    seen = set()
    for record in cands.records:
        items = set(record.items)
        assert not items & seen
        seen |= items
    pairs = [(i, u) for r in cands.records for i, u, _ in r.pairs]
    assert len(pairs) == len(set(pairs))
    lists = fairmatch_rerank(recs, cfg)
    for user, items in lists.items():
        assert len(items) == n == len(set(items))
        assert set(items) <= set(recs.ranked_items(user))


def test_deterministic():
    recs = generate_synthetic(80, 40, 10, 1.1, seed=5)
    cfg = FairMatchConfig(alpha=0.25, t=10, n=5)
    assert fairmatch_iterate(recs, cfg) == fairmatch_iterate(recs, cfg)
    assert fairmatch_rerank(recs, cfg) == fairmatch_rerank(recs, cfg)


# -- list reconstruction -------------------------------------------------------

def test_visibility_counts():
    assert visibility_counts({"x": ["a", "b"], "y": ["a", "c"], "z": ["a", "b"]}) == {"a": 3, "b": 2, "c": 1}
    vis = visibility_counts({"x": ["a", "b"]})
    assert vis == {"a": 1, "b": 1}
    assert vis["never"] == 0


def test_reconstruct_swaps_most_visible():
    assert reconstruct_list(["a", "b", "c"], ["x"], {"a": 5, "b": 1, "c": 3}, 3) == ["b", "c", "x"]


def test_reconstruct_without_candidates():
    assert reconstruct_list(["a", "b", "c"], [], {"a": 5, "b": 1, "c": 3}, 3) == ["a", "b", "c"]


def test_reconstruct_many_candidates():
    assert reconstruct_list(["a", "b"], ["x", "y", "z"], {}, 2) == ["x", "y"]


def test_reconstruct_skips_present_candidates():
    # "a" is already listed, so only "x" is appended
    assert reconstruct_list(["a", "b", "c"], ["a", "x"], {"a": 1, "b": 9, "c": 3}, 3) == ["a", "c", "x"]


def test_reconstruct_ties_keep_rank_order():
    assert reconstruct_list(["a", "b", "c"], ["x"], {"a": 2, "b": 2, "c": 2}, 3) == ["a", "b", "x"]


@settings(max_examples=300, deadline=None)
@given(
    data=st.data(),
    n=st.integers(1, 8),
)
def test_reconstruct_conservation(data, n):
    pool = [f"i{k}" for k in range(20)]
    top = data.draw(st.lists(st.sampled_from(pool), min_size=n, max_size=n, unique=True))
    cands = data.draw(st.lists(st.sampled_from(pool), max_size=12))
    vis = {item: data.draw(st.integers(0, 50)) for item in pool}
    out = reconstruct_list(top, cands, vis, n)
    assert len(out) == n == len(set(out))
    assert set(out) <= set(top) | set(cands)
    dropped = set(top) - set(out)
    if dropped:
        kept = set(out) & set(top)
        assert all(vis[d] >= vis[k] for d in dropped for k in kept)
