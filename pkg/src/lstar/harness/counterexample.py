"""Two tiny graphs showing why regressing cost-to-go is not enough for A*.

``off_path_graph``: s0 -> s1 -> s2 is optimal. A heuristic that is exact on
the plan but underestimates the off-plan state s3 makes A* expand s3 before
s1, even though L2 on the plan states is zero. L* flags the violation.

``tied_graph``: two optimal routes s0 -> {s1, s2} -> s3 -> s4. With the
perfect heuristic both s1 and s2 have f = 3 after the first expansion, so
the expansion count depends on tie-breaking alone.
"""

from __future__ import annotations

from ..dataset import build_sample
from ..losses import l2_loss, lstar_hard
from ..search import GraphInstance, TieBreak, astar, shortest_path_oracle


def off_path_graph() -> GraphInstance:
    edges = {
        "s0": [("s1", 1.0), ("s3", 1.0), ("s5", 1.0)],
        "s1": [("s2", 1.0), ("s4", 1.0)],
        "s3": [("s6", 1.0)],
        "s4": [("s6", 1.0)],
        "s5": [("s2", 3.0)],
        "s6": [("s2", 2.0)],
        "s2": [],
    }
    return GraphInstance(edges, "s0", frozenset({"s2"}))


def tied_graph() -> GraphInstance:
    edges = {
        "s0": [("s1", 1.0), ("s2", 1.0)],
        "s1": [("s3", 1.0)],
        "s2": [("s3", 1.0), ("s5", 1.0)],
        "s3": [("s4", 1.0)],
        "s5": [("s6", 1.0)],
        "s6": [("s4", 1.0)],
        "s4": [],
    }
    return GraphInstance(edges, "s0", frozenset({"s4"}))


def run_counterexample() -> dict:
    """Run both demonstrations, assert the expected behaviour and return a report."""
    graph = off_path_graph()
    perfect = shortest_path_oracle(graph)
    # the generating search uses the perfect heuristic
    sample = build_sample(graph, astar(graph, perfect.__getitem__), instance_ref="off-path")
    on_states = [s.state for s in sample.on_path]
    off_states = sorted(s.state for s in sample.off_path)
    assert on_states == ["s0", "s1", "s2"], on_states
    assert off_states == ["s3", "s4", "s5"], off_states

    skewed = dict(perfect)
    skewed["s3"] = 0.0  # f(s3) = 1 < f(s1) = 2
    run = astar(graph, skewed.__getitem__)
    pops = [s for s, _ in run.expansion_order]
    assert pops.index("s3") < pops.index("s1"), pops
    for s in sample.labeled_states:
        s.cost_to_go = perfect[s.state]
    on_only = type(sample)(sample.instance_ref, sample.on_path, [], instance=graph)
    l2_on_path, _ = l2_loss(on_only, skewed)
    term1, term2 = lstar_hard(sample, skewed)
    assert l2_on_path == 0.0 and term1 > 0.0

    tied = tied_graph()
    tied_h = shortest_path_oracle(tied)
    first = astar(tied, tied_h.__getitem__, budget=1)
    open_f = sorted(n.f for n in first.generated_records.values() if not n.expanded)
    assert open_f == [3.0, 3.0], open_f
    tie_runs = {policy.value: astar(tied, tied_h.__getitem__, tie_break=policy) for policy in (TieBreak.LARGER_G, TieBreak.FIFO)}
    for outcome in tie_runs.values():
        assert outcome.plan is not None and outcome.plan.total_cost == 3.0

    return {
        "off_path_pop_order": " ".join(pops),
        "off_path_l2_on_plan": l2_on_path,
        "off_path_term1_hard": term1,
        "off_path_term2_hard": term2,
        "tied_open_f_after_first_expansion": " ".join(f"{f:g}" for f in open_f),
        **{f"tied_expanded_{name}": out.expanded_count for name, out in tie_runs.items()},
    }
