from __future__ import annotations

from ..domains import MazeGrid, encode_batch
from ..model import ModelParams, forward_batch


class NeuralHeuristic:
    """Memoizing wrapper that evaluates the network on batches of states.

    ``astar`` calls ``prefetch`` with each batch of freshly generated
    states, so the network runs once per expansion instead of once per
    state. Maze state spaces are small enough to evaluate up front.
    """

    def __init__(self, params: ModelParams, instance, precompute: bool = True):
        self.params = params
        self.instance = instance
        self.cache: dict = {}
        self.evaluations = 0
        if precompute and isinstance(instance, MazeGrid):
            self.prefetch(instance.passable_cells())

    def prefetch(self, states) -> None:
        todo = [s for s in dict.fromkeys(states) if s not in self.cache]
        if not todo:
            return
        values = forward_batch(self.params, encode_batch(self.instance, todo))
        self.evaluations += len(todo)
        self.cache.update(zip(todo, values.tolist()))

    def __call__(self, state) -> float:
        value = self.cache.get(state)
        if value is None:
            self.prefetch([state])
            value = self.cache[state]
        return value
