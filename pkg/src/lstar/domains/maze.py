"""Grid mazes with teleports.

Cells are ``(x, y)`` tuples with ``x`` the column and ``y`` the row, origin in
the top-left corner. A maze state is just the agent's cell.

Moving into a teleport endpoint relocates the agent to the paired endpoint
within the same unit-cost move.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import cached_property

Cell = tuple[int, int]
MOVES: tuple[Cell, ...] = ((0, -1), (1, 0), (0, 1), (-1, 0))  # up, right, down, left

DEFAULT_WALL_BREAK_RATE = 0.1
DEFAULT_TELEPORT_PAIRS = 4


class MazeGenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class MazeGrid:
    width: int
    height: int
    passable: tuple[tuple[bool, ...], ...]  # indexed [y][x]
    teleports: tuple[tuple[Cell, Cell], ...]
    start: Cell
    goal: Cell
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if len(self.passable) != self.height or any(len(r) != self.width for r in self.passable):
            raise ValueError("passable rows do not match width/height")
        canonical = tuple(sorted(tuple(sorted(p)) for p in self.teleports))
        object.__setattr__(self, "teleports", canonical)
        endpoints = [c for pair in canonical for c in pair]
        if len(set(endpoints)) != len(endpoints):
            raise ValueError("teleport endpoint used twice")
        if self.start in endpoints or self.goal in endpoints:
            raise ValueError("start and goal cannot be teleport endpoints")
        for c in (self.start, self.goal, *endpoints):
            if not self.is_passable(c):
                raise ValueError(f"cell {c} must be passable")

    def is_passable(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height and self.passable[y][x]

    @cached_property
    def partner(self) -> dict[Cell, Cell]:
        out = {}
        for a, b in self.teleports:
            out[a], out[b] = b, a
        return out

    @cached_property
    def _successor_table(self) -> dict[Cell, list[tuple[Cell, float]]]:
        table = {}
        for y in range(self.height):
            for x in range(self.width):
                if self.passable[y][x]:
                    table[(x, y)] = _moves_from(self, (x, y))
        return table

    def passable_cells(self) -> list[Cell]:
        return [(x, y) for y in range(self.height) for x in range(self.width) if self.passable[y][x]]

    # ProblemInstance protocol
    @property
    def initial_state(self) -> Cell:
        return self.start

    def is_goal(self, state: Cell) -> bool:
        return state == self.goal

    def successors(self, state: Cell) -> list[tuple[Cell, float]]:
        return list(self._successor_table[state])


def _moves_from(grid: MazeGrid, cell: Cell) -> list[tuple[Cell, float]]:
    out = []
    x, y = cell
    for dx, dy in MOVES:
        nxt = (x + dx, y + dy)
        if grid.is_passable(nxt):
            out.append((grid.partner.get(nxt, nxt), 1.0))
    return out


def maze_successors(grid: MazeGrid, state: Cell) -> list[tuple[Cell, float]]:
    return grid.successors(state)


def maze_generate(
    n: int,
    seed: int,
    wall_break_rate: float = DEFAULT_WALL_BREAK_RATE,
    teleport_pairs: int = DEFAULT_TELEPORT_PAIRS,
) -> MazeGrid:
    """Generate an ``n x n`` maze.

    Rooms sit on even coordinates; a seeded recursive backtracker carves the
    wall cells between them into a perfect maze. Each remaining wall between
    two rooms is then knocked out with probability ``wall_break_rate`` and
    ``teleport_pairs`` pairs of free cells become teleports. For even ``n``
    the last row and column stay solid.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 0.0 <= wall_break_rate <= 1.0:
        raise ValueError("wall_break_rate must lie in [0, 1]")
    rng = random.Random(seed)
    open_cells = [[False] * n for _ in range(n)]
    rooms = (n + 1) // 2

    def carve(rx: int, ry: int) -> None:
        open_cells[2 * ry][2 * rx] = True

    carve(0, 0)
    visited = {(0, 0)}
    stack = [(0, 0)]
    while stack:
        rx, ry = stack[-1]
        options = [
            (rx + dx, ry + dy)
            for dx, dy in MOVES
            if 0 <= rx + dx < rooms and 0 <= ry + dy < rooms and (rx + dx, ry + dy) not in visited
        ]
        if not options:
            stack.pop()
            continue
        nx, ny = rng.choice(options)
        open_cells[ry + ny][rx + nx] = True  # wall cell between the two rooms
        carve(nx, ny)
        visited.add((nx, ny))
        stack.append((nx, ny))

    # interior walls separating two rooms: exactly one odd coordinate, both neighbours in range
    for y in range(n):
        for x in range(n):
            if open_cells[y][x] or (x % 2) + (y % 2) != 1:
                continue
            if x % 2 and x + 1 >= n or y % 2 and y + 1 >= n:
                continue
            if rng.random() < wall_break_rate:
                open_cells[y][x] = True

    start = (0, 0)
    last = 2 * (rooms - 1)
    goal = (last, last)
    free = [(x, y) for y in range(n) for x in range(n) if open_cells[y][x] and (x, y) not in (start, goal)]
    if len(free) < 2 * teleport_pairs:
        raise MazeGenerationError(f"{len(free)} free cells cannot host {teleport_pairs} teleport pairs")
    chosen = rng.sample(free, 2 * teleport_pairs)
    pairs = tuple((chosen[2 * i], chosen[2 * i + 1]) for i in range(teleport_pairs))
    return MazeGrid(
        width=n,
        height=n,
        passable=tuple(tuple(row) for row in open_cells),
        teleports=pairs,
        start=start,
        goal=goal,
    )


def rotate_cell(cell: Cell, width: int, height: int, quarter_turns: int) -> Cell:
    """Where ``cell`` of a ``width x height`` grid lands after clockwise quarter turns."""
    for _ in range(quarter_turns % 4):
        x, y = cell
        cell = (height - 1 - y, x)
        width, height = height, width
    return cell


def maze_rotate(grid: MazeGrid, quarter_turns: int) -> MazeGrid:
    """Rotate the whole maze clockwise by ``quarter_turns`` * 90 degrees."""
    turns = quarter_turns % 4
    for _ in range(turns):
        w, h = grid.width, grid.height

        def rot(c: Cell, w=w, h=h) -> Cell:
            return rotate_cell(c, w, h, 1)

        passable = [[False] * h for _ in range(w)]
        for y in range(h):
            for x in range(w):
                nx, ny = rot((x, y))
                passable[ny][nx] = grid.passable[y][x]
        grid = MazeGrid(
            width=h,
            height=w,
            passable=tuple(tuple(r) for r in passable),
            teleports=tuple((rot(a), rot(b)) for a, b in grid.teleports),
            start=rot(grid.start),
            goal=rot(grid.goal),
            name=grid.name,
        )
    return grid


def manhattan_heuristic(grid: MazeGrid):
    """Manhattan distance to the goal, ignoring teleports."""
    gx, gy = grid.goal

    def h(state: Cell) -> float:
        return float(abs(state[0] - gx) + abs(state[1] - gy))

    return h
