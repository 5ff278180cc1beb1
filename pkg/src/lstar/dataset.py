"""Training samples from A* runs, cost-to-go labelling and dataset files.

Dataset file layout (text, one record per line)::

    lstar-dataset v1
    instance <path to instance file>
    meta heuristic=<name> seed=<int> budget=<int> records=<n> partial=<0|1>
    O <path_index> <g> <cost_to_go|DEAD|?> <state>
    N - <g> <cost_to_go|DEAD|?> <state>
    ...

States are serialized as ``x,y`` (maze) or ``px,py;bx,by;...`` (Sokoban).
Relative instance paths are resolved against the dataset file's directory.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from .domains import deserialize_state, domain_of, read_instance, serialize_state
from .losses import LabeledState, TrainingSample
from .search import (
    DEFAULT_ORACLE_CAP,
    SearchOutcome,
    StateSpaceTooLarge,
    astar,
    shortest_path_oracle,
    zero_heuristic,
)

HEADER = "lstar-dataset v1"
DEFAULT_DEAD_END_MULTIPLIER = 2.0


class UnsolvedOutcome(ValueError):
    pass


class DatasetFormatError(ValueError):
    pass


class VersionMismatch(DatasetFormatError):
    pass


class MalformedRecord(DatasetFormatError):
    pass


@dataclass(frozen=True)
class Provenance:
    instance_path: str
    heuristic: str
    seed: int
    budget: int


@dataclass
class Dataset:
    samples: list[TrainingSample] = field(default_factory=list)
    provenance: list[Provenance] = field(default_factory=list)

    def __post_init__(self):
        if len(self.samples) != len(self.provenance):
            raise ValueError("every sample needs provenance")
        refs = [s.instance_ref for s in self.samples]
        if len(set(refs)) != len(refs):
            raise ValueError("instance_refs must be unique")

    def add(self, sample: TrainingSample, provenance: Provenance) -> None:
        if any(s.instance_ref == sample.instance_ref for s in self.samples):
            raise ValueError(f"duplicate instance_ref {sample.instance_ref!r}")
        self.samples.append(sample)
        self.provenance.append(provenance)

    def __len__(self) -> int:
        return len(self.samples)


def build_sample(instance, outcome: SearchOutcome, instance_ref: str = "") -> TrainingSample:
    """Split the generated states of a solved search into plan and off-plan states.

    On-path g-values are the plan's cumulative costs; off-path states keep
    the best g recorded by the search, whether they ended open or closed.
    """
    if outcome.plan is None:
        raise UnsolvedOutcome("cannot build a sample from an unsolved search")
    records = outcome.generated_records
    on_path = [LabeledState(s, records[s].g, path_index=i) for i, s in enumerate(outcome.plan.states)]
    on_set = set(outcome.plan.states)
    off_path = [LabeledState(s, node.g) for s, node in records.items() if s not in on_set]
    sample = TrainingSample(instance_ref or getattr(instance, "name", ""), on_path, off_path, instance=instance)
    check_sample(sample)
    return sample


def build_exhaustive_sample(instance, cap: int = DEFAULT_ORACLE_CAP) -> TrainingSample:
    """Sample whose off-path set is every other reachable state, at its optimal g.

    The plan is an optimal one found by blind search. Useful when the off-path
    set has to cover the whole state space.
    """
    solved = astar(instance, zero_heuristic, budget=cap)
    if solved.plan is None:
        raise UnsolvedOutcome("instance has no solution within the cap")

    class _NoGoal:
        initial_state = instance.initial_state
        successors = staticmethod(instance.successors)

        @staticmethod
        def is_goal(state):
            return False

    sweep = astar(_NoGoal(), zero_heuristic, budget=cap)
    if sweep.budget_exhausted:
        raise StateSpaceTooLarge(f"more than {cap} reachable states")
    records = sweep.generated_records
    on_path = [LabeledState(s, records[s].g, path_index=i) for i, s in enumerate(solved.plan.states)]
    on_set = set(solved.plan.states)
    off_path = [LabeledState(s, node.g) for s, node in records.items() if s not in on_set]
    return TrainingSample(getattr(instance, "name", ""), on_path, off_path, instance=instance)


def check_sample(sample: TrainingSample) -> None:
    on = [s.state for s in sample.on_path]
    if set(on) & {s.state for s in sample.off_path}:
        raise ValueError("on-path and off-path states overlap")
    gs = [s.g for s in sample.on_path]
    if any(b <= a for a, b in zip(gs, gs[1:])):
        raise ValueError("on-path g-values must strictly increase")
    if sample.on_path[0].g != 0.0:
        raise ValueError("plan must start at g = 0")


def label_cost_to_go(sample: TrainingSample, instance, labeling_budget: int = DEFAULT_ORACLE_CAP) -> TrainingSample:
    """Attach exact optimal cost-to-go labels (``math.inf`` for dead ends).

    If the state space exceeds ``labeling_budget`` the sample is returned
    unlabeled with ``partially_labeled`` set.
    """
    try:
        costs = shortest_path_oracle(instance, cap=labeling_budget)
    except StateSpaceTooLarge:
        sample.partially_labeled = True
        return sample
    for s in sample.labeled_states:
        s.cost_to_go = costs.get(s.state, math.inf)
    sample.partially_labeled = False
    return sample


def dead_end_value(samples, multiplier: float = DEFAULT_DEAD_END_MULTIPLIER) -> float:
    """Finite stand-in for dead-end labels: ``multiplier`` x the largest finite label."""
    finite = [
        s.cost_to_go
        for sample in samples
        for s in sample.labeled_states
        if s.cost_to_go is not None and math.isfinite(s.cost_to_go)
    ]
    return multiplier * max(finite, default=1.0)


def _fmt_label(value: float | None) -> str:
    if value is None:
        return "?"
    if math.isinf(value):
        return "DEAD"
    return repr(float(value))


def _parse_label(text: str) -> float | None:
    if text == "?":
        return None
    if text == "DEAD":
        return math.inf
    return float(text)


def write_dataset(dataset: Dataset, path: str | Path) -> None:
    lines = [HEADER]
    for sample, prov in zip(dataset.samples, dataset.provenance):
        lines.append(f"instance {prov.instance_path}")
        lines.append(
            f"meta heuristic={prov.heuristic} seed={prov.seed} budget={prov.budget} "
            f"records={len(sample)} partial={int(sample.partially_labeled)}"
        )
        for s in sample.on_path:
            lines.append(f"O {s.path_index} {s.g!r} {_fmt_label(s.cost_to_go)} {serialize_state(s.state)}")
        for s in sample.off_path:
            lines.append(f"N - {s.g!r} {_fmt_label(s.cost_to_go)} {serialize_state(s.state)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_dataset(path: str | Path, load_instances: bool = True) -> Dataset:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0] != HEADER:
        raise VersionMismatch(f"{path}: expected header {HEADER!r}, got {lines[0] if lines else ''!r}")
    dataset = Dataset()
    i = 1
    while i < len(lines):
        if not lines[i].startswith("instance "):
            raise MalformedRecord(f"{path}:{i + 1}: expected 'instance' line")
        instance_path = lines[i][len("instance ") :]
        if i + 1 >= len(lines) or not lines[i + 1].startswith("meta "):
            raise MalformedRecord(f"{path}:{i + 2}: expected 'meta' line")
        meta = _parse_meta(lines[i + 1], path, i + 2)
        n = int(meta["records"])
        instance = None
        if load_instances:
            resolved = Path(instance_path)
            if not resolved.is_absolute():
                resolved = path.parent / resolved
            instance = read_instance(resolved)
            domain = domain_of(instance)
        else:
            domain = None
        on_path, off_path = [], []
        for j in range(i + 2, i + 2 + n):
            if j >= len(lines):
                raise MalformedRecord(f"{path}: sample {instance_path} is truncated")
            on_path_rec, rec = _parse_record(lines[j], domain, path, j + 1)
            (on_path if on_path_rec else off_path).append(rec)
        sample = TrainingSample(instance_path, on_path, off_path, instance=instance, partially_labeled=meta["partial"] == "1")
        prov = Provenance(instance_path, meta["heuristic"], int(meta["seed"]), int(meta["budget"]))
        dataset.add(sample, prov)
        i += 2 + n
    return dataset


def _parse_meta(line: str, path: Path, lineno: int) -> dict[str, str]:
    try:
        meta = dict(item.split("=", 1) for item in line.split()[1:])
    except ValueError as exc:
        raise MalformedRecord(f"{path}:{lineno}: bad meta line") from exc
    missing = {"heuristic", "seed", "budget", "records", "partial"} - meta.keys()
    if missing:
        raise MalformedRecord(f"{path}:{lineno}: meta lacks {sorted(missing)}")
    return meta


def _parse_record(line: str, domain: str | None, path: Path, lineno: int) -> tuple[bool, LabeledState]:
    parts = line.split(" ")
    if len(parts) != 5 or parts[0] not in ("O", "N"):
        raise MalformedRecord(f"{path}:{lineno}: bad record {line!r}")
    kind, idx, g, label, state_text = parts
    try:
        if domain is None:
            domain = "sokoban" if ";" in state_text else "maze"
        state = deserialize_state(state_text, domain)
        rec = LabeledState(
            state=state,
            g=float(g),
            cost_to_go=_parse_label(label),
            path_index=int(idx) if kind == "O" else None,
        )
    except ValueError as exc:
        raise MalformedRecord(f"{path}:{lineno}: {exc}") from exc
    if (kind == "N") != (idx == "-"):
        raise MalformedRecord(f"{path}:{lineno}: path index does not match record kind")
    return kind == "O", rec


def relative_instance_path(instance_path: str | Path, dataset_path: str | Path) -> str:
    return os.path.relpath(Path(instance_path).resolve(), Path(dataset_path).resolve().parent)
