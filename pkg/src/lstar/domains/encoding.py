"""Binary occupancy planes fed to the heuristic network.

Channel order:

* maze:    walls, agent, goal, teleport endpoints
* sokoban: walls, player, boxes, goal cells

Arrays are ``(channels, height, width)`` float64 at native grid resolution.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .maze import MazeGrid
from .sokoban import SokobanLevel, SokobanState

N_CHANNELS = 4
_static_cache: dict[int, tuple[object, np.ndarray]] = {}


def static_planes(instance) -> np.ndarray:
    """State-independent channels, cached per instance object."""
    hit = _static_cache.get(id(instance))
    if hit is not None and hit[0] is instance:
        return hit[1]
    planes = np.zeros((N_CHANNELS, instance.height, instance.width))
    if isinstance(instance, MazeGrid):
        planes[0] = ~np.array(instance.passable, dtype=bool)
        planes[2][instance.goal[1], instance.goal[0]] = 1.0
        for a, b in instance.teleports:
            for x, y in (a, b):
                planes[3][y, x] = 1.0
    elif isinstance(instance, SokobanLevel):
        planes[0] = np.array(instance.walls, dtype=bool)
        for x, y in instance.goal_cells:
            planes[3][y, x] = 1.0
    else:
        raise TypeError(f"cannot encode {type(instance).__name__}")
    planes.setflags(write=False)
    if len(_static_cache) > 4096:
        _static_cache.clear()
    _static_cache[id(instance)] = (instance, planes)
    return planes


def encode_state(instance, state) -> np.ndarray:
    return encode_batch(instance, [state])[0]


def encode_batch(instance, states: Sequence) -> np.ndarray:
    base = static_planes(instance)
    out = np.repeat(base[None], len(states), axis=0)
    if isinstance(instance, MazeGrid):
        for i, (x, y) in enumerate(states):
            out[i, 1, y, x] = 1.0
    else:
        for i, state in enumerate(states):
            assert isinstance(state, SokobanState)
            px, py = state.player
            out[i, 1, py, px] = 1.0
            for bx, by in state.boxes:
                out[i, 2, by, bx] = 1.0
    return out


def domain_of(instance) -> str:
    if isinstance(instance, MazeGrid):
        return "maze"
    if isinstance(instance, SokobanLevel):
        return "sokoban"
    raise TypeError(f"unknown instance type {type(instance).__name__}")
