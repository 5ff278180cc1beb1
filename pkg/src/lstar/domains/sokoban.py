"""Sokoban levels, push semantics and reverse-play level generation."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

from .maze import MOVES, Cell


class SokobanGenerationError(RuntimeError):
    pass


class SokobanState(NamedTuple):
    player: Cell
    boxes: tuple[Cell, ...]  # sorted


@dataclass(frozen=True)
class SokobanLevel:
    width: int
    height: int
    walls: tuple[tuple[bool, ...], ...]  # indexed [y][x]
    goal_cells: frozenset[Cell]
    initial_player: Cell
    initial_boxes: frozenset[Cell]
    name: str = field(default="", compare=False)
    # prune pushes of a box into a non-goal corner (off by default)
    corner_deadlocks: bool = field(default=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "goal_cells", frozenset(self.goal_cells))
        object.__setattr__(self, "initial_boxes", frozenset(self.initial_boxes))
        if len(self.goal_cells) != len(self.initial_boxes):
            raise ValueError("box count must equal goal count")
        for c in (self.initial_player, *self.initial_boxes, *self.goal_cells):
            if not self.is_floor(c):
                raise ValueError(f"cell {c} is a wall or off the board")
        if self.initial_player in self.initial_boxes:
            raise ValueError("player stands on a box")

    def is_floor(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height and not self.walls[y][x]

    @cached_property
    def dead_corners(self) -> frozenset[Cell]:
        dead = set()
        for y in range(self.height):
            for x in range(self.width):
                c = (x, y)
                if not self.is_floor(c) or c in self.goal_cells:
                    continue
                blocked = [not self.is_floor((x + dx, y + dy)) for dx, dy in MOVES]
                # MOVES order is up, right, down, left: adjacent pairs form corners
                if any(blocked[i] and blocked[(i + 1) % 4] for i in range(4)):
                    dead.add(c)
        return frozenset(dead)

    @property
    def initial_state(self) -> SokobanState:
        return SokobanState(self.initial_player, tuple(sorted(self.initial_boxes)))

    def is_goal(self, state: SokobanState) -> bool:
        return all(b in self.goal_cells for b in state.boxes)

    def successors(self, state: SokobanState) -> list[tuple[SokobanState, float]]:
        return sokoban_successors(self, state)


def sokoban_successors(level: SokobanLevel, state: SokobanState) -> list[tuple[SokobanState, float]]:
    """Unit-cost player moves; stepping into a box pushes it if the cell behind is free."""
    px, py = state.player
    boxes = state.boxes
    out = []
    for dx, dy in MOVES:
        nxt = (px + dx, py + dy)
        if not level.is_floor(nxt):
            continue
        if nxt in boxes:
            beyond = (nxt[0] + dx, nxt[1] + dy)
            if not level.is_floor(beyond) or beyond in boxes:
                continue
            if level.corner_deadlocks and beyond in level.dead_corners:
                continue
            moved = tuple(sorted(beyond if b == nxt else b for b in boxes))
            out.append((SokobanState(nxt, moved), 1.0))
        else:
            out.append((SokobanState(nxt, boxes), 1.0))
    return out


def sokoban_generate(
    n: int,
    boxes: int,
    seed: int,
    steps: int | None = None,
    wall_density: float = 0.1,
    max_retries: int = 100,
) -> SokobanLevel:
    """Generate a solvable ``n x n`` level by playing backwards from the solved position.

    The border is solid wall and a few interior walls are sprinkled in. Boxes
    start on their goals; a seeded random walk of player moves and pulls then
    scatters them. Every pull reverses to a legal push, so the level is
    solvable by construction. Levels that end already solved are retried.
    """
    if n < 3:
        raise ValueError("n must be >= 3")
    rng = random.Random(seed)
    steps = steps if steps is not None else 10 * n * max(boxes, 1)
    for _ in range(max_retries):
        level = _try_generate(n, boxes, rng, steps, wall_density)
        if level is not None:
            return level
    raise SokobanGenerationError(f"no level after {max_retries} retries (n={n}, boxes={boxes})")


def _try_generate(n: int, n_boxes: int, rng: random.Random, steps: int, wall_density: float) -> SokobanLevel | None:
    walls = [[x in (0, n - 1) or y in (0, n - 1) for x in range(n)] for y in range(n)]
    interior = [(x, y) for y in range(1, n - 1) for x in range(1, n - 1)]
    for x, y in interior:
        if rng.random() < wall_density:
            walls[y][x] = True
    floor = [c for c in interior if not walls[c[1]][c[0]]]
    if len(floor) < n_boxes + 1:
        return None
    if not _connected(floor):
        return None
    picks = rng.sample(floor, n_boxes + 1)
    goals = frozenset(picks[:n_boxes])
    player = picks[n_boxes]
    boxes = set(goals)

    def free(c: Cell) -> bool:
        return not walls[c[1]][c[0]] and c not in boxes

    for _ in range(steps):
        dx, dy = rng.choice(MOVES)
        px, py = player
        nxt = (px + dx, py + dy)
        if not free(nxt):
            continue
        behind = (px - dx, py - dy)
        if behind in boxes and rng.random() < 0.5:
            boxes.remove(behind)
            boxes.add(player)
        player = nxt

    if n_boxes and boxes == set(goals):
        return None
    return SokobanLevel(
        width=n,
        height=n,
        walls=tuple(tuple(r) for r in walls),
        goal_cells=goals,
        initial_player=player,
        initial_boxes=frozenset(boxes),
    )


def _connected(cells: list[Cell]) -> bool:
    pool = set(cells)
    stack = [cells[0]]
    seen = {cells[0]}
    while stack:
        x, y = stack.pop()
        for dx, dy in MOVES:
            c = (x + dx, y + dy)
            if c in pool and c not in seen:
                seen.add(c)
                stack.append(c)
    return len(seen) == len(pool)


def box_distance_heuristic(level: SokobanLevel):
    """Sum over boxes of the Manhattan distance to the nearest goal cell."""
    goals = tuple(level.goal_cells)

    def h(state: SokobanState) -> float:
        return float(sum(min(abs(bx - gx) + abs(by - gy) for gx, gy in goals) for bx, by in state.boxes))

    return h
