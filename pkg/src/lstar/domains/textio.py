"""Plain-text instance files.

Both formats start with a domain line (``maze`` or ``sokoban``) and a
``W H`` line, followed by ``H`` rows of one glyph per cell.

Maze glyphs: ``#`` wall, ``.`` floor, ``S`` start, ``G`` goal and digits
``1``-``9`` for teleport endpoints (each digit exactly twice).

Sokoban glyphs are the usual ones: ``#`` wall, space floor, ``@`` player,
``$`` box, ``.`` goal, ``*`` box on goal, ``+`` player on goal. Sokoban rows
shorter than ``W`` are padded with floor, since trailing blanks are easily lost.
"""

from __future__ import annotations

from pathlib import Path

from .maze import MazeGrid
from .sokoban import SokobanLevel, SokobanState


class InstanceFormatError(ValueError):
    pass


class MalformedCharacter(InstanceFormatError):
    pass


class InconsistentDimensions(InstanceFormatError):
    pass


class UnpairedTeleport(InstanceFormatError):
    pass


def render_instance(instance) -> str:
    if isinstance(instance, MazeGrid):
        return _render_maze(instance)
    if isinstance(instance, SokobanLevel):
        return _render_sokoban(instance)
    raise TypeError(f"cannot render {type(instance).__name__}")


def parse_instance(text: str, name: str = ""):
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) < 2:
        raise InconsistentDimensions("missing domain or size line")
    kind = lines[0].strip()
    try:
        width, height = (int(v) for v in lines[1].split())
    except ValueError as exc:
        raise InconsistentDimensions(f"bad size line {lines[1]!r}") from exc
    rows = lines[2:]
    if len(rows) != height:
        raise InconsistentDimensions(f"expected {height} rows, found {len(rows)}")
    if kind == "maze":
        return _parse_maze(rows, width, height, name)
    if kind == "sokoban":
        return _parse_sokoban(rows, width, height, name)
    raise InstanceFormatError(f"unknown domain {kind!r}")


def read_instance(path: str | Path):
    path = Path(path)
    return parse_instance(path.read_text(), name=path.stem)


def write_instance(instance, path: str | Path) -> None:
    Path(path).write_text(render_instance(instance))


def _render_maze(grid: MazeGrid) -> str:
    if len(grid.teleports) > 9:
        raise ValueError("text format supports at most 9 teleport pairs")
    cells = [["." if grid.passable[y][x] else "#" for x in range(grid.width)] for y in range(grid.height)]
    for digit, pair in enumerate(grid.teleports, start=1):
        for x, y in pair:
            cells[y][x] = str(digit)
    cells[grid.start[1]][grid.start[0]] = "S"
    cells[grid.goal[1]][grid.goal[0]] = "G"
    body = "\n".join("".join(r) for r in cells)
    return f"maze\n{grid.width} {grid.height}\n{body}\n"


def _parse_maze(rows: list[str], width: int, height: int, name: str) -> MazeGrid:
    passable = []
    start = goal = None
    endpoints: dict[str, list] = {}
    for y, row in enumerate(rows):
        if len(row) != width:
            raise InconsistentDimensions(f"row {y} has {len(row)} cells, expected {width}")
        line = []
        for x, ch in enumerate(row):
            if ch == "#":
                line.append(False)
                continue
            if ch == "S":
                if start is not None:
                    raise MalformedCharacter("more than one start")
                start = (x, y)
            elif ch == "G":
                if goal is not None:
                    raise MalformedCharacter("more than one goal")
                goal = (x, y)
            elif ch in "123456789":
                endpoints.setdefault(ch, []).append((x, y))
            elif ch != ".":
                raise MalformedCharacter(f"unexpected {ch!r} at ({x}, {y})")
            line.append(True)
        passable.append(tuple(line))
    if start is None or goal is None:
        raise MalformedCharacter("maze needs exactly one S and one G")
    for digit, cells in endpoints.items():
        if len(cells) != 2:
            raise UnpairedTeleport(f"teleport {digit} appears {len(cells)} times")
    pairs = tuple(tuple(endpoints[d]) for d in sorted(endpoints))
    return MazeGrid(width, height, tuple(passable), pairs, start, goal, name=name)


def _render_sokoban(level: SokobanLevel) -> str:
    out = []
    for y in range(level.height):
        row = []
        for x in range(level.width):
            c = (x, y)
            if level.walls[y][x]:
                row.append("#")
                continue
            goal = c in level.goal_cells
            if c == level.initial_player:
                row.append("+" if goal else "@")
            elif c in level.initial_boxes:
                row.append("*" if goal else "$")
            else:
                row.append("." if goal else " ")
        out.append("".join(row))
    body = "\n".join(out)
    return f"sokoban\n{level.width} {level.height}\n{body}\n"


def _parse_sokoban(rows: list[str], width: int, height: int, name: str) -> SokobanLevel:
    walls, goals, boxes = [], set(), set()
    player = None
    for y, row in enumerate(rows):
        if len(row) > width:
            raise InconsistentDimensions(f"row {y} has {len(row)} cells, expected {width}")
        row = row.ljust(width)
        line = []
        for x, ch in enumerate(row):
            if ch not in "# @$.*+":
                raise MalformedCharacter(f"unexpected {ch!r} at ({x}, {y})")
            line.append(ch == "#")
            if ch in ".*+":
                goals.add((x, y))
            if ch in "$*":
                boxes.add((x, y))
            if ch in "@+":
                if player is not None:
                    raise MalformedCharacter("more than one player")
                player = (x, y)
        walls.append(tuple(line))
    if player is None:
        raise MalformedCharacter("level has no player")
    try:
        return SokobanLevel(width, height, tuple(walls), frozenset(goals), player, frozenset(boxes), name=name)
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from exc


def serialize_state(state) -> str:
    """Compact state text used in dataset files: ``x,y`` or ``px,py;bx,by;...``."""
    if isinstance(state, SokobanState):
        return ";".join(f"{x},{y}" for x, y in (state.player, *state.boxes))
    x, y = state
    return f"{x},{y}"


def deserialize_state(text: str, domain: str):
    cells = [tuple(int(v) for v in part.split(",")) for part in text.split(";")]
    if any(len(c) != 2 for c in cells):
        raise ValueError(f"bad state {text!r}")
    if domain == "maze":
        if len(cells) != 1:
            raise ValueError(f"bad maze state {text!r}")
        return cells[0]
    return SokobanState(cells[0], tuple(sorted(cells[1:])))
