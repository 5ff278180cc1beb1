import math
import random

import pytest

from lstar.search import GraphInstance

ACCEPTANCE_LINES: list[str] = []


def random_digraph(seed: int, max_nodes: int = 100) -> GraphInstance:
    """Seeded random digraph with integer weights 1-9 and a random goal node."""
    rng = random.Random(seed)
    n = rng.randint(2, max_nodes)
    edges = {}
    for u in range(n):
        k = rng.randint(0, 4)
        edges[u] = [(rng.randrange(n), float(rng.randint(1, 9))) for _ in range(k)]
    return GraphInstance(edges, 0, frozenset({rng.randrange(n)}))


def bellman_ford(graph: GraphInstance) -> dict:
    """Forward single-source costs from the initial node by plain edge relaxation."""
    nodes = set(graph.edges)
    for succ in graph.edges.values():
        nodes.update(t for t, _ in succ)
    dist = {v: math.inf for v in nodes}
    dist[graph.initial_state] = 0.0
    for _ in range(len(nodes) - 1):
        changed = False
        for u, succ in graph.edges.items():
            if dist[u] == math.inf:
                continue
            for v, w in succ:
                if dist[u] + w < dist[v]:
                    dist[v] = dist[u] + w
                    changed = True
        if not changed:
            break
    return dist


def bfs_distances(instance, start) -> dict:
    """Unit-cost forward distances from ``start`` using a FIFO queue."""
    from collections import deque

    dist = {start: 0}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        for t, _ in instance.successors(s):
            if t not in dist:
                dist[t] = dist[s] + 1
                queue.append(t)
    return dist


def bfs_cost_to_go(instance) -> dict:
    """Unit-cost distance to the goal for every reachable state, via per-state BFS."""
    reachable = bfs_distances(instance, instance.initial_state)
    out = {}
    for s in reachable:
        d = bfs_distances(instance, s)
        goals = [v for t, v in d.items() if instance.is_goal(t)]
        out[s] = float(min(goals)) if goals else math.inf
    return out


@pytest.fixture
def graph_factory():
    return random_digraph


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
