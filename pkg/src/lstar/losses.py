"""L2 regression loss and the L* ranking loss over one instance's search.

A training sample splits the states generated by one search into the states
on the returned plan (``on_path``, in plan order) and all other generated
states (``off_path``). Heuristic values are passed either as an array
aligned with ``sample.states`` (on-path first, then off-path) or as a
mapping from state to value. Gradients always come back as an array in
``sample.states`` order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Mapping, Sequence

import numpy as np

AS_PRINTED = "as-printed"
AS_EQ3 = "as-eq3"
MONOTONE_DIRECTIONS = (AS_PRINTED, AS_EQ3)
DEAD_END = math.inf


class MissingHeuristicValue(KeyError):
    pass


class UnlabeledState(ValueError):
    pass


@dataclass
class LabeledState:
    state: Hashable
    g: float
    cost_to_go: float | None = None  # math.inf marks a proven dead end
    path_index: int | None = None

    @property
    def is_dead_end(self) -> bool:
        return self.cost_to_go is not None and math.isinf(self.cost_to_go)


@dataclass
class TrainingSample:
    instance_ref: str
    on_path: list[LabeledState]
    off_path: list[LabeledState]
    instance: object = field(default=None, compare=False, repr=False)
    partially_labeled: bool = False

    def __post_init__(self):
        if not self.on_path:
            raise ValueError("on_path must not be empty")

    @property
    def states(self) -> list[Hashable]:
        return [s.state for s in self.on_path] + [s.state for s in self.off_path]

    @property
    def labeled_states(self) -> list[LabeledState]:
        return self.on_path + self.off_path

    def g_values(self) -> np.ndarray:
        return np.array([s.g for s in self.labeled_states], dtype=np.float64)

    def __len__(self) -> int:
        return len(self.on_path) + len(self.off_path)


@dataclass
class LossReport:
    term1_hard: float
    term2_hard: float
    surrogate: float
    l2: float | None
    rn_bound: int

    @property
    def lstar_hard(self) -> float:
        return self.term1_hard + self.term2_hard


def logistic_loss(x: np.ndarray | float) -> np.ndarray | float:
    """log(1 + exp(-x)), evaluated as max(0, -x) + log1p(exp(-|x|))."""
    x = np.asarray(x, dtype=np.float64)
    return np.maximum(0.0, -x) + np.log1p(np.exp(-np.abs(x)))


def logistic_loss_grad(x: np.ndarray) -> np.ndarray:
    """d/dx log(1 + exp(-x)) = -1 / (1 + exp(x))."""
    x = np.asarray(x, dtype=np.float64)
    return -0.5 * (1.0 - np.tanh(0.5 * x))


def _h_array(sample: TrainingSample, h_values) -> np.ndarray:
    if isinstance(h_values, Mapping):
        try:
            return np.array([h_values[s] for s in sample.states], dtype=np.float64)
        except KeyError as exc:
            raise MissingHeuristicValue(exc.args[0]) from None
    h = np.asarray(h_values, dtype=np.float64)
    if h.shape != (len(sample),):
        raise MissingHeuristicValue(f"expected {len(sample)} heuristic values, got {h.shape}")
    return h


def _split_f(sample: TrainingSample, h_values) -> tuple[np.ndarray, np.ndarray]:
    f = sample.g_values() + _h_array(sample, h_values)
    n_on = len(sample.on_path)
    return f[:n_on], f[n_on:]


def _off_mask(sample: TrainingSample, drop_dead_ends: bool) -> np.ndarray:
    if not drop_dead_ends:
        return np.ones(len(sample.off_path), dtype=bool)
    return np.array([not s.is_dead_end for s in sample.off_path], dtype=bool)


def _path_pairs(n_on: int, direction: str) -> tuple[np.ndarray, np.ndarray]:
    """Index pairs (a, b) whose violation is ``f[a] > f[b]`` in the path-order term."""
    if direction not in MONOTONE_DIRECTIONS:
        raise ValueError(f"monotone_direction must be one of {MONOTONE_DIRECTIONS}")
    later, earlier = np.tril_indices(n_on, k=-1)
    if direction == AS_PRINTED:
        return later, earlier
    return earlier, later


def lstar_hard(
    sample: TrainingSample,
    h_values,
    monotone_direction: str = AS_PRINTED,
    drop_dead_ends: bool = False,
) -> tuple[float, float]:
    """Normalized violation counts of the separation and path-order constraints.

    term1 counts pairs (on-path s', off-path s'') with f(s') >= f(s'');
    term2 counts path pairs j < i with f(s_i) > f(s_j) (``as-printed``) or
    f(s_j) > f(s_i) (``as-eq3``). A term with an empty normalizer is 0.
    """
    f_on, f_off = _split_f(sample, h_values)
    f_off = f_off[_off_mask(sample, drop_dead_ends)]
    n_on, n_off = len(f_on), len(f_off)
    term1 = 0.0
    if n_off:
        term1 = float(np.count_nonzero(f_on[:, None] >= f_off[None, :])) / (n_on * n_off)
    term2 = 0.0
    if n_on > 1:
        a, b = _path_pairs(n_on, monotone_direction)
        term2 = float(np.count_nonzero(f_on[a] > f_on[b])) / (n_on * (n_on - 1))
    return term1, term2


def lstar_surrogate(
    sample: TrainingSample,
    h_values,
    margin: float = 0.0,
    monotone_direction: str = AS_PRINTED,
    drop_dead_ends: bool = False,
) -> tuple[float, np.ndarray]:
    """Logistic relaxation of the hard loss and its gradient over h.

    Each bracket [a >= b] (or [a > b]) becomes log(1 + exp(-(b - a - margin))),
    with the same normalizers as the hard loss. Only strict path pairs j < i
    contribute; the diagonal bracket is identically zero.
    """
    if margin < 0:
        raise ValueError("margin must be non-negative")
    f_on, f_off_all = _split_f(sample, h_values)
    keep = _off_mask(sample, drop_dead_ends)
    f_off = f_off_all[keep]
    n_on, n_off = len(f_on), len(f_off)
    d_on = np.zeros(n_on)
    d_off = np.zeros(n_off)
    loss = 0.0

    if n_off:
        norm = 1.0 / (n_on * n_off)
        x = f_off[None, :] - f_on[:, None] - margin
        loss += norm * float(logistic_loss(x).sum())
        dx = norm * logistic_loss_grad(x)
        d_off += dx.sum(axis=0)
        d_on -= dx.sum(axis=1)

    if n_on > 1:
        norm = 1.0 / (n_on * (n_on - 1))
        a, b = _path_pairs(n_on, monotone_direction)
        x = f_on[b] - f_on[a] - margin
        loss += norm * float(logistic_loss(x).sum())
        dx = norm * logistic_loss_grad(x)
        np.add.at(d_on, b, dx)
        np.add.at(d_on, a, -dx)

    grad_off = np.zeros(len(sample.off_path))
    grad_off[keep] = d_off
    return loss, np.concatenate([d_on, grad_off])


def l2_loss(
    sample: TrainingSample,
    h_values,
    dead_end_value: float | None = None,
    skip_unlabeled: bool = False,
) -> tuple[float, np.ndarray]:
    """Sum of squared residuals over every labeled state, with gradient 2(h - y).

    Dead ends are regressed towards ``dead_end_value``. Unlabeled states raise
    ``UnlabeledState`` unless ``skip_unlabeled``, in which case they get zero
    gradient.
    """
    h = _h_array(sample, h_values)
    y = np.empty_like(h)
    used = np.ones_like(h, dtype=bool)
    for i, s in enumerate(sample.labeled_states):
        if s.cost_to_go is None:
            if not skip_unlabeled:
                raise UnlabeledState(f"state {s.state!r} has no cost-to-go label")
            used[i] = False
            y[i] = 0.0
        elif math.isinf(s.cost_to_go):
            if dead_end_value is None:
                raise UnlabeledState(f"dead end {s.state!r} needs dead_end_value")
            y[i] = dead_end_value
        else:
            y[i] = s.cost_to_go
    resid = np.where(used, h - y, 0.0)
    return float(resid @ resid), 2.0 * resid


def compute_rn_bound(sample: TrainingSample, h_values, drop_dead_ends: bool = False) -> int:
    """Number of off-path states whose f is <= the f of some on-path state."""
    f_on, f_off = _split_f(sample, h_values)
    f_off = f_off[_off_mask(sample, drop_dead_ends)]
    return int(np.count_nonzero(f_off <= f_on.max()))


def loss_report(
    sample: TrainingSample,
    h_values,
    margin: float = 0.0,
    monotone_direction: str = AS_PRINTED,
    drop_dead_ends: bool = False,
    dead_end_value: float | None = None,
) -> LossReport:
    h = _h_array(sample, h_values)
    t1, t2 = lstar_hard(sample, h, monotone_direction, drop_dead_ends)
    surrogate, _ = lstar_surrogate(sample, h, margin, monotone_direction, drop_dead_ends)
    l2 = None
    labeled = all(s.cost_to_go is not None for s in sample.labeled_states)
    has_dead = any(s.is_dead_end for s in sample.labeled_states)
    if labeled and (dead_end_value is not None or not has_dead):
        l2, _ = l2_loss(sample, h, dead_end_value)
    return LossReport(t1, t2, surrogate, l2, compute_rn_bound(sample, h, drop_dead_ends))


def make_sample(
    on_path: Sequence[tuple[Hashable, float]],
    off_path: Sequence[tuple[Hashable, float]],
    instance_ref: str = "",
) -> TrainingSample:
    """Build a sample from ``(state, g)`` pairs; convenient for hand-made examples."""
    return TrainingSample(
        instance_ref=instance_ref,
        on_path=[LabeledState(s, float(g), path_index=i) for i, (s, g) in enumerate(on_path)],
        off_path=[LabeledState(s, float(g)) for s, g in off_path],
    )
