"""Generation, training, evaluation, curriculum and bootstrap procedures."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..dataset import Dataset, Provenance, build_sample, dead_end_value, label_cost_to_go
from ..domains import (
    base_heuristic,
    encode_batch,
    maze_generate,
    read_instance,
    sokoban_generate,
    write_instance,
)
from ..losses import TrainingSample, l2_loss, loss_report, lstar_surrogate
from ..model import AdamState, ModelParams, NonFiniteGradient, adam_step, backward, forward_batch, model_init
from ..search import StateSpaceTooLarge, astar, goal_cost_oracle, zero_heuristic
from .config import ExperimentConfig
from .heuristic import NeuralHeuristic

log = logging.getLogger(__name__)


class UnlabeledSample(ValueError):
    pass


def generate_instance(config: ExperimentConfig, seed: int):
    if config.domain == "maze":
        inst = maze_generate(config.size, seed, config.wall_break_rate, config.teleport_pairs)
    else:
        inst = sokoban_generate(config.size, config.boxes, seed)
    object.__setattr__(inst, "name", f"{config.domain}-n{config.size}-s{seed}")
    return inst


def generate_instances(config: ExperimentConfig, count: int, first_seed: int) -> list:
    return [generate_instance(config, first_seed + i) for i in range(count)]


def write_instances(instances, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for inst in instances:
        path = out_dir / f"{inst.name}.txt"
        write_instance(inst, path)
        paths.append(path)
    return paths


def load_instances(paths) -> list:
    """Read instance files; directories contribute their ``*.txt`` files in sorted order."""
    out = []
    for p in paths:
        p = Path(p)
        files = sorted(p.glob("*.txt")) if p.is_dir() else [p]
        out.extend(read_instance(f) for f in files)
    return out


# --- datasets ---------------------------------------------------------------


def solve_for_sample(instance, budget: int, heuristic=None) -> TrainingSample | None:
    h = heuristic if heuristic is not None else base_heuristic(instance)
    outcome = astar(instance, h, budget=budget)
    if outcome.plan is None:
        return None
    return build_sample(instance, outcome, instance_ref=instance.name)


def make_dataset(instances, config: ExperimentConfig, label: bool = True, paths=None) -> Dataset:
    """Solve each instance with the classical base heuristic and record the search."""
    dataset = Dataset()
    for i, inst in enumerate(instances):
        sample = solve_for_sample(inst, config.budget)
        if sample is None:
            log.warning("%s not solved within %d expansions; skipped", inst.name, config.budget)
            continue
        if label:
            label_cost_to_go(sample, inst, config.labeling_cap)
        ref = str(paths[i]) if paths is not None else inst.name
        sample.instance_ref = ref
        dataset.add(sample, Provenance(ref, "base", config.seed, config.budget))
    return dataset


# --- training ---------------------------------------------------------------

EPOCH_FIELDS = ("epoch", "loss", "objective", "term1_hard", "term2_hard", "rn_bound", "l2", "skipped")


@dataclass
class Trainer:
    """Per-instance minibatch training with one Adam step per sample."""

    config: ExperimentConfig
    params: ModelParams
    adam: AdamState | None = None
    seed: int = 0
    dead_end: float | None = None
    rng: np.random.Generator = field(init=False)

    def __post_init__(self):
        if self.adam is None:
            self.adam = AdamState.fresh(self.params.theta.size, lr=self.config.lr)
        self.rng = np.random.default_rng(self.seed)

    def sample_gradient(self, sample: TrainingSample, h: np.ndarray) -> tuple[float, np.ndarray]:
        cfg = self.config
        if cfg.loss == "lstar":
            return lstar_surrogate(sample, h, cfg.margin, cfg.monotone_direction, cfg.drop_dead_ends)
        if any(s.cost_to_go is None for s in sample.labeled_states) and not sample.partially_labeled:
            raise UnlabeledSample(f"{sample.instance_ref} has no cost-to-go labels; l2 needs them")
        return l2_loss(sample, h, self.dead_end, skip_unlabeled=True)

    def epoch(self, samples: list[TrainingSample], epoch_index: int) -> dict:
        cfg = self.config
        if cfg.loss == "l2" and self.dead_end is None:
            self.dead_end = dead_end_value(samples, cfg.dead_end_multiplier)
        order = self.rng.permutation(len(samples))
        objective = t1 = t2 = rn = l2_sum = 0.0
        l2_count = skipped = 0
        for idx in order:
            sample = samples[idx]
            x = encode_batch(sample.instance, sample.states)
            h, cache = forward_batch(self.params, x, keep_cache=True)
            report = loss_report(
                sample, h, cfg.margin, cfg.monotone_direction, cfg.drop_dead_ends, self.dead_end
            )
            t1 += report.term1_hard
            t2 += report.term2_hard
            rn += report.rn_bound
            if report.l2 is not None:
                l2_sum += report.l2
                l2_count += 1
            value, dL_dh = self.sample_gradient(sample, h)
            objective += value
            grad = backward(self.params, x, dL_dh, cache)
            try:
                self.params, self.adam = adam_step(self.params, grad, self.adam)
            except NonFiniteGradient:
                log.warning("non-finite gradient on %s; sample skipped", sample.instance_ref)
                skipped += 1
        n = max(len(samples), 1)
        return {
            "epoch": epoch_index,
            "loss": cfg.loss,
            "objective": objective / n,
            "term1_hard": t1 / n,
            "term2_hard": t2 / n,
            "rn_bound": rn / n,
            "l2": l2_sum / l2_count if l2_count else "",
            "skipped": skipped,
        }


def train(
    samples: list[TrainingSample],
    config: ExperimentConfig,
    params: ModelParams | None = None,
    epochs: int | None = None,
    seed: int | None = None,
) -> tuple[ModelParams, list[dict]]:
    params = params if params is not None else model_init(config.model_config())
    trainer = Trainer(config, params, seed=config.seed if seed is None else seed)
    rows = []
    for e in range(1, (config.epochs if epochs is None else epochs) + 1):
        rows.append(trainer.epoch(samples, e))
        log.info("epoch %d: %s", e, rows[-1])
    return trainer.params, rows


# --- evaluation -------------------------------------------------------------

EVAL_FIELDS = ("instance", "solved", "expanded", "generated", "plan_length", "optimal_length", "gap")


@dataclass
class EvalReport:
    rows: list[dict]
    outcomes: dict = field(default_factory=dict, repr=False)

    @property
    def coverage(self) -> float:
        return sum(r["solved"] for r in self.rows) / len(self.rows) if self.rows else 0.0

    @property
    def mean_expanded(self) -> float:
        return float(np.mean([r["expanded"] for r in self.rows])) if self.rows else 0.0

    @property
    def mean_gap(self) -> float | None:
        gaps = [r["gap"] for r in self.rows if r["gap"] != ""]
        return float(np.mean(gaps)) if gaps else None

    def solved_names(self) -> list[str]:
        return [r["instance"] for r in self.rows if r["solved"]]

    def summary(self) -> dict:
        gap = self.mean_gap
        return {
            "instances": len(self.rows),
            "coverage": self.coverage,
            "mean_expanded": self.mean_expanded,
            "mean_gap": "" if gap is None else gap,
        }


def make_heuristic(kind, instance):
    if isinstance(kind, ModelParams):
        return NeuralHeuristic(kind, instance)
    if kind == "zero":
        return zero_heuristic
    if kind == "base":
        return base_heuristic(instance)
    if callable(kind):
        return kind(instance)
    raise ValueError(f"unknown heuristic {kind!r}")


def evaluate(
    heuristic,
    instances,
    budget: int,
    oracle_cap: int | None = 2_000_000,
    keep_outcomes: bool = False,
) -> EvalReport:
    """Run A* on every instance with ``heuristic`` (params, 'zero', 'base' or a factory).

    Plan gaps are measured against the exact optimum when the oracle fits in
    ``oracle_cap`` states; ``oracle_cap=None`` skips the oracle.
    """
    rows, outcomes = [], {}
    for inst in instances:
        outcome = astar(inst, make_heuristic(heuristic, inst), budget=budget)
        optimal = None
        if oracle_cap is not None:
            try:
                optimal = goal_cost_oracle(inst, oracle_cap)
            except StateSpaceTooLarge:
                pass
        plan_len = outcome.plan.total_cost if outcome.plan is not None else ""
        known = optimal is not None and math.isfinite(optimal)
        rows.append(
            {
                "instance": inst.name,
                "solved": int(outcome.solved),
                "expanded": outcome.expanded_count,
                "generated": outcome.generated_count,
                "plan_length": plan_len,
                "optimal_length": optimal if known else "",
                "gap": plan_len - optimal if outcome.solved and known else "",
            }
        )
        if keep_outcomes:
            outcomes[inst.name] = outcome
    return EvalReport(rows, outcomes)


# --- curriculum & bootstrap -------------------------------------------------


def curriculum_round(
    params: ModelParams,
    instances,
    dataset: Dataset,
    config: ExperimentConfig,
    refs: dict[str, str] | None = None,
) -> tuple[ModelParams, Dataset, EvalReport]:
    """Evaluate, add the model's own solves to the training set and fine-tune once.

    ``refs`` maps instance names to the reference stored in the dataset
    (normally a file path); it defaults to the name itself.
    """
    report = evaluate(params, instances, config.budget, config.labeling_cap, keep_outcomes=True)
    known = {getattr(s.instance, "name", None) or s.instance_ref for s in dataset.samples}
    by_name = {inst.name: inst for inst in instances}
    added = 0
    for name in report.solved_names():
        if name in known:
            continue
        inst = by_name[name]
        ref = (refs or {}).get(name, name)
        sample = build_sample(inst, report.outcomes[name], instance_ref=ref)
        if config.loss == "l2":
            label_cost_to_go(sample, inst, config.labeling_cap)
        dataset.add(sample, Provenance(ref, "model", config.seed, config.budget))
        added += 1
    if not report.solved_names():
        log.warning("model solved no instance; curriculum round is a no-op")
        return params, dataset, report
    log.info("curriculum: %d new samples, %d total", added, len(dataset))
    params, _ = train(dataset.samples, config, params=params)
    return params, dataset, report


BOOTSTRAP_FIELDS = ("epoch", "solved", "total", "coverage", "mean_expanded", "train_samples")


def bootstrap(
    instances,
    config: ExperimentConfig,
    epochs: int,
    params: ModelParams | None = None,
) -> tuple[ModelParams, list[dict]]:
    """Alternate solve attempts and one training epoch over everything solved so far.

    Row ``e`` reports the attempt made after ``e`` training epochs; row 0 is
    the untrained network.
    """
    params = params if params is not None else model_init(config.model_config())
    trainer = Trainer(config, params, seed=config.seed)
    solved: dict[str, TrainingSample] = {}
    rows = []
    for e in range(epochs + 1):
        report = evaluate(trainer.params, instances, config.budget, oracle_cap=None, keep_outcomes=True)
        for inst in instances:
            outcome = report.outcomes[inst.name]
            if outcome.solved:
                sample = build_sample(inst, outcome, instance_ref=inst.name)
                if config.loss == "l2":
                    label_cost_to_go(sample, inst, config.labeling_cap)
                solved[inst.name] = sample
        rows.append(
            {
                "epoch": e,
                "solved": sum(r["solved"] for r in report.rows),
                "total": len(instances),
                "coverage": report.coverage,
                "mean_expanded": report.mean_expanded,
                "train_samples": len(solved),
            }
        )
        log.info("bootstrap epoch %d: coverage %.3f", e, report.coverage)
        if e == epochs:
            break
        if solved:
            trainer.dead_end = None
            trainer.epoch([solved[k] for k in sorted(solved)], e + 1)
    return trainer.params, rows


def config_row(config: ExperimentConfig) -> dict:
    return asdict(config)
