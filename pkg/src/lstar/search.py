"""A* search with reopening, deterministic tie-breaking and exact oracles.

States are arbitrary hashable values. An instance is anything exposing
``initial_state``, ``is_goal(state)`` and ``successors(state)``, the latter
returning an ordered list of ``(state, weight)`` pairs.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Protocol

StateId = Hashable
Heuristic = Callable[[StateId], float]

DEFAULT_BUDGET = 100_000
DEFAULT_ORACLE_CAP = 2_000_000


class ProblemInstance(Protocol):
    initial_state: StateId

    def is_goal(self, state: StateId) -> bool: ...

    def successors(self, state: StateId) -> list[tuple[StateId, float]]: ...


class StateSpaceTooLarge(RuntimeError):
    """Raised when exhaustive enumeration exceeds its configured cap."""


class BrokenParentChain(ValueError):
    pass


class TieBreak(enum.Enum):
    """Ordering among open nodes with equal f."""

    LARGER_G = "larger-g"
    SMALLER_G = "smaller-g"
    FIFO = "fifo"
    LIFO = "lifo"

    def key(self, f: float, g: float, seq: int) -> tuple:
        if self is TieBreak.LARGER_G:
            return (f, -g, seq)
        if self is TieBreak.SMALLER_G:
            return (f, g, seq)
        if self is TieBreak.FIFO:
            return (f, seq)
        return (f, -seq)


@dataclass
class GraphInstance:
    """Explicit weighted digraph; handy for tests and toy examples."""

    edges: dict[StateId, list[tuple[StateId, float]]]
    initial_state: StateId
    goals: frozenset = frozenset()

    def __post_init__(self):
        self.goals = frozenset(self.goals)
        for src, succ in self.edges.items():
            for _, w in succ:
                if w < 0:
                    raise ValueError(f"negative edge weight out of {src!r}")

    def is_goal(self, state: StateId) -> bool:
        return state in self.goals

    def successors(self, state: StateId) -> list[tuple[StateId, float]]:
        return list(self.edges.get(state, ()))


@dataclass
class SearchNode:
    state: StateId
    g: float
    h: float
    parent: StateId | None
    insertion_seq: int
    expanded: bool = False
    pop_order: int | None = None

    @property
    def f(self) -> float:
        return self.g + self.h


@dataclass
class Plan:
    states: list[StateId]
    total_cost: float

    @property
    def edges(self) -> list[tuple[StateId, StateId]]:
        return list(zip(self.states, self.states[1:]))

    def __len__(self) -> int:
        return len(self.states) - 1

    def validate(self, instance: ProblemInstance) -> None:
        """Replay the plan against ``instance``; raise ``ValueError`` on mismatch."""
        if self.states[0] != instance.initial_state:
            raise ValueError("plan does not start at the initial state")
        cost = 0.0
        for a, b in self.edges:
            weights = [w for s, w in instance.successors(a) if s == b]
            if not weights:
                raise ValueError(f"no edge {a!r} -> {b!r}")
            cost += min(weights)
        if not instance.is_goal(self.states[-1]):
            raise ValueError("plan does not end in a goal state")
        if not math.isclose(cost, self.total_cost, rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError(f"plan cost {self.total_cost} != replayed cost {cost}")


@dataclass
class SearchOutcome:
    plan: Plan | None
    expanded_count: int
    generated_count: int
    reopened_count: int
    budget_exhausted: bool
    generated_records: dict[StateId, SearchNode]
    # (state, f) in pop order, goal pop included
    expansion_order: list[tuple[StateId, float]] = field(default_factory=list)

    @property
    def solved(self) -> bool:
        return self.plan is not None

    def expanded_states(self) -> set[StateId]:
        return {s for s, node in self.generated_records.items() if node.expanded}


def reconstruct_path(records: dict[StateId, SearchNode], goal_state: StateId) -> Plan:
    if goal_state not in records:
        raise BrokenParentChain(f"goal {goal_state!r} not in records")
    states = [goal_state]
    seen = {goal_state}
    node = records[goal_state]
    while node.parent is not None:
        parent = node.parent
        if parent not in records:
            raise BrokenParentChain(f"parent {parent!r} missing from records")
        if parent in seen:
            raise BrokenParentChain(f"parent chain cycles at {parent!r}")
        seen.add(parent)
        states.append(parent)
        node = records[parent]
    states.reverse()
    return Plan(states=states, total_cost=records[goal_state].g)


def astar(
    instance: ProblemInstance,
    heuristic: Heuristic,
    tie_break: TieBreak = TieBreak.LARGER_G,
    budget: int = DEFAULT_BUDGET,
    reopen: bool = True,
) -> SearchOutcome:
    """Run A* from ``instance.initial_state`` until a goal is popped.

    Open-list g-updates use lazy re-insertion: the superseded heap entry is
    skipped when popped. A goal pop counts as an expansion. ``budget`` caps
    the number of pops; hitting it yields ``plan=None`` and
    ``budget_exhausted=True``.

    If ``heuristic`` has a ``prefetch(states)`` method it is called with each
    batch of newly generated states before they are evaluated one by one.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    prefetch = getattr(heuristic, "prefetch", None)

    s0 = instance.initial_state
    if prefetch is not None:
        prefetch([s0])
    seq = 0
    root = SearchNode(s0, 0.0, _check_h(heuristic(s0), s0), None, seq)
    records: dict[StateId, SearchNode] = {s0: root}
    heap = [(tie_break.key(root.f, 0.0, seq), seq, s0)]
    live: dict[StateId, int] = {s0: seq}  # open states -> seq of their valid heap entry

    expanded = reopened = 0
    order: list[tuple[StateId, float]] = []
    plan = None
    exhausted = False

    while heap:
        _, entry_seq, state = heap[0]
        if live.get(state) != entry_seq:
            heapq.heappop(heap)
            continue
        if expanded >= budget:
            exhausted = True
            break
        heapq.heappop(heap)
        del live[state]
        node = records[state]
        node.expanded = True
        node.pop_order = expanded
        expanded += 1
        order.append((state, node.f))
        if instance.is_goal(state):
            plan = reconstruct_path(records, state)
            break

        succ = instance.successors(state)
        if prefetch is not None:
            fresh = [s for s, _ in succ if s not in records]
            if fresh:
                prefetch(fresh)
        for child, w in succ:
            g = node.g + w
            rec = records.get(child)
            if rec is None:
                seq += 1
                rec = SearchNode(child, g, _check_h(heuristic(child), child), state, seq)
                records[child] = rec
            elif g < rec.g:
                if child not in live:
                    if not reopen:
                        continue
                    reopened += 1
                    rec.expanded = False
                seq += 1
                rec.g, rec.parent, rec.insertion_seq = g, state, seq
            else:
                continue
            live[child] = seq
            heapq.heappush(heap, (tie_break.key(rec.f, g, seq), seq, child))

    return SearchOutcome(
        plan=plan,
        expanded_count=expanded,
        generated_count=len(records),
        reopened_count=reopened,
        budget_exhausted=exhausted,
        generated_records=records,
        expansion_order=order,
    )


def _check_h(value: float, state: StateId) -> float:
    value = float(value)
    if not (value >= 0.0 and math.isfinite(value)):
        raise ValueError(f"heuristic value {value!r} at {state!r} is not finite and non-negative")
    return value


def zero_heuristic(state: StateId) -> float:
    return 0.0


def enumerate_states(instance: ProblemInstance, cap: int = DEFAULT_ORACLE_CAP) -> dict[StateId, list[tuple[StateId, float]]]:
    """All states reachable from the initial state, with their successor lists."""
    adjacency: dict[StateId, list[tuple[StateId, float]]] = {}
    stack = [instance.initial_state]
    seen = {instance.initial_state}
    while stack:
        s = stack.pop()
        succ = instance.successors(s)
        adjacency[s] = succ
        for t, _ in succ:
            if t not in seen:
                seen.add(t)
                if len(seen) > cap:
                    raise StateSpaceTooLarge(f"more than {cap} reachable states")
                stack.append(t)
    return adjacency


def shortest_path_oracle(instance: ProblemInstance, cap: int = DEFAULT_ORACLE_CAP) -> dict[StateId, float]:
    """Exact optimal cost-to-goal for every reachable state.

    Dijkstra from the goal set over reversed edges. States from which no goal
    is reachable map to ``math.inf``.
    """
    adjacency = enumerate_states(instance, cap)
    reverse: dict[StateId, list[tuple[StateId, float]]] = {s: [] for s in adjacency}
    for s, succ in adjacency.items():
        for t, w in succ:
            reverse[t].append((s, w))

    dist = {s: math.inf for s in adjacency}
    heap = []
    for s in adjacency:
        if instance.is_goal(s):
            dist[s] = 0.0
            heap.append((0.0, id(s), s))
    heapq.heapify(heap)
    done = set()
    while heap:
        d, _, s = heapq.heappop(heap)
        if s in done:
            continue
        done.add(s)
        for p, w in reverse[s]:
            nd = d + w
            if nd < dist[p]:
                dist[p] = nd
                heapq.heappush(heap, (nd, id(p), p))
    return dist


def goal_cost_oracle(instance: ProblemInstance, cap: int = DEFAULT_ORACLE_CAP) -> float:
    return shortest_path_oracle(instance, cap)[instance.initial_state]


def is_consistent(instance: ProblemInstance, heuristic: Heuristic, states: Iterable[StateId]) -> bool:
    """Check h(s) - h(s') <= w(s, s') on every edge leaving ``states``."""
    for s in states:
        hs = heuristic(s)
        for t, w in instance.successors(s):
            if hs - heuristic(t) > w + 1e-12:
                return False
    return True
