"""Command-line front end.

Every subcommand accepts ``--config`` (a ``key = value`` file mirroring
``ExperimentConfig``), ``--seed`` and ``--output-dir``; the environment
variable ``LSTAR_OUTPUT_DIR`` overrides the output directory. All tabular
output is CSV.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys
from pathlib import Path

from ..dataset import read_dataset, relative_instance_path, write_dataset
from ..model import load_checkpoint, model_init, save_checkpoint
from ..search import astar
from .config import ExperimentConfig, load_config, render_config
from .counterexample import run_counterexample
from .experiments import (
    BOOTSTRAP_FIELDS,
    EPOCH_FIELDS,
    EVAL_FIELDS,
    bootstrap,
    curriculum_round,
    evaluate,
    generate_instances,
    load_instances,
    make_dataset,
    make_heuristic,
    train,
    write_instances,
)

log = logging.getLogger("lstar")


def write_csv(path: Path, rows: list[dict], fields) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(fields), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row.get(k, "")) for k in fields})
    return path


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return value


def _config(args) -> ExperimentConfig:
    overrides = {
        "seed": args.seed,
        "output_dir": args.output_dir,
        "domain": getattr(args, "domain", None),
        "size": getattr(args, "size", None),
        "boxes": getattr(args, "boxes", None),
        "budget": getattr(args, "budget", None),
        "loss": getattr(args, "loss", None),
        "epochs": getattr(args, "epochs", None),
        "margin": getattr(args, "margin", None),
        "lr": getattr(args, "lr", None),
        "monotone_direction": getattr(args, "monotone_direction", None),
    }
    return load_config(args.config, **overrides)


def _out(config: ExperimentConfig) -> Path:
    out = config.resolved_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_generate(args) -> int:
    config = _config(args)
    count = args.count if args.count is not None else config.train_count
    out = Path(args.dest) if args.dest else _out(config) / "instances"
    instances = generate_instances(config, count, config.seed)
    paths = write_instances(instances, out)
    print(f"wrote {len(paths)} instances to {out}")
    return 0


def cmd_solve(args) -> int:
    config = _config(args)
    instances = load_instances(args.instances)
    kind = load_checkpoint(args.model) if args.model else args.heuristic
    rows = []
    for inst in instances:
        outcome = astar(inst, make_heuristic(kind, inst), budget=config.budget)
        rows.append(
            {
                "instance": inst.name,
                "solved": int(outcome.solved),
                "cost": outcome.plan.total_cost if outcome.plan is not None else "",
                "expanded": outcome.expanded_count,
                "generated": outcome.generated_count,
                "reopened": outcome.reopened_count,
            }
        )
    path = write_csv(_out(config) / args.csv, rows, ("instance", "solved", "cost", "expanded", "generated", "reopened"))
    print(f"solved {sum(r['solved'] for r in rows)}/{len(rows)}; wrote {path}")
    return 0


def _instance_files(paths) -> list[Path]:
    files = []
    for p in map(Path, paths):
        files.extend(sorted(p.glob("*.txt")) if p.is_dir() else [p])
    return files


def cmd_make_dataset(args) -> int:
    config = _config(args)
    files = _instance_files(args.instances)
    instances = load_instances(files)
    dest = Path(args.dest) if args.dest else _out(config) / "dataset.txt"
    dest.parent.mkdir(parents=True, exist_ok=True)
    refs = [relative_instance_path(f, dest) for f in files]
    dataset = make_dataset(instances, config, label=not args.no_label, paths=refs)
    write_dataset(dataset, dest)
    print(f"wrote {len(dataset)} samples to {dest}")
    return 0


def cmd_train(args) -> int:
    config = _config(args)
    dataset = read_dataset(args.dataset)
    params = load_checkpoint(args.init) if args.init else model_init(config.model_config())
    params, rows = train(dataset.samples, config, params=params)
    out = _out(config)
    save_checkpoint(params, out / f"model-{config.loss}.ckpt")
    write_csv(out / f"train-{config.loss}.csv", rows, EPOCH_FIELDS)
    (out / "config.txt").write_text(render_config(config))
    print(f"trained {config.epochs} epochs on {len(dataset)} samples; outputs in {out}")
    return 0


def cmd_evaluate(args) -> int:
    config = _config(args)
    instances = load_instances(args.instances)
    kind = load_checkpoint(args.model) if args.model else args.heuristic
    report = evaluate(kind, instances, config.budget, config.labeling_cap)
    out = _out(config)
    write_csv(out / args.csv, report.rows, EVAL_FIELDS)
    summary = report.summary()
    write_csv(out / args.csv.replace(".csv", "-summary.csv"), [summary], tuple(summary))
    print(", ".join(f"{k}={v}" for k, v in summary.items()))
    return 0


def cmd_curriculum(args) -> int:
    config = _config(args)
    params = load_checkpoint(args.model)
    dataset = read_dataset(args.dataset)
    files = _instance_files(args.instances)
    instances = load_instances(files)
    out = _out(config)
    dest = out / "dataset-curriculum.txt"
    # re-anchor every instance reference at the new dataset location
    source_dir = Path(args.dataset).parent
    dataset.provenance = [
        dataclasses.replace(p, instance_path=relative_instance_path(source_dir / p.instance_path, dest))
        for p in dataset.provenance
    ]
    for sample, prov in zip(dataset.samples, dataset.provenance):
        sample.instance_ref = prov.instance_path
    refs = {inst.name: relative_instance_path(f, dest) for inst, f in zip(instances, files)}
    before = len(dataset)
    params, dataset, report = curriculum_round(params, instances, dataset, config, refs)
    save_checkpoint(params, out / "model-curriculum.ckpt")
    write_dataset(dataset, dest)
    print(f"coverage {report.coverage:.3f}; training set {before} -> {len(dataset)}")
    return 0


def cmd_bootstrap(args) -> int:
    config = _config(args)
    instances = load_instances(args.instances)
    params, rows = bootstrap(instances, config, args.bootstrap_epochs)
    out = _out(config)
    write_csv(out / f"bootstrap-{config.loss}.csv", rows, BOOTSTRAP_FIELDS)
    save_checkpoint(params, out / f"model-bootstrap-{config.loss}.ckpt")
    print(" ".join(f"{r['epoch']}:{r['coverage']:.3f}" for r in rows))
    return 0


def cmd_counterexample(args) -> int:
    config = _config(args)
    report = run_counterexample()
    path = write_csv(_out(config) / "counterexample.csv", [report], tuple(report))
    for k, v in report.items():
        print(f"{k}: {v}")
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value experiment configuration file")
    common.add_argument("--seed", type=int, help="base random seed")
    common.add_argument("--output-dir", help="output directory (LSTAR_OUTPUT_DIR wins)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="lstar", description="Train and evaluate A* heuristics with L2 and L* losses.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="write seeded instance files")
    p.add_argument("--domain", choices=("maze", "sokoban"))
    p.add_argument("--size", type=int)
    p.add_argument("--boxes", type=int)
    p.add_argument("--count", type=int)
    p.add_argument("--dest", help="target directory (default <output-dir>/instances)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", parents=[common], help="run A* on instances")
    p.add_argument("instances", nargs="+")
    p.add_argument("--heuristic", choices=("zero", "base"), default="base")
    p.add_argument("--model", help="checkpoint to use as the heuristic")
    p.add_argument("--budget", type=int)
    p.add_argument("--csv", default="solve.csv")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("make-dataset", parents=[common], help="solve instances and record training samples")
    p.add_argument("instances", nargs="+")
    p.add_argument("--budget", type=int)
    p.add_argument("--dest", help="dataset file (default <output-dir>/dataset.txt)")
    p.add_argument("--no-label", action="store_true", help="skip cost-to-go labelling (enough for L*)")
    p.set_defaults(func=cmd_make_dataset)

    def training_opts(p):
        p.add_argument("--loss", choices=("l2", "lstar"))
        p.add_argument("--epochs", type=int)
        p.add_argument("--margin", type=float)
        p.add_argument("--lr", type=float)
        p.add_argument("--monotone-direction", choices=("as-printed", "as-eq3"))

    p = sub.add_parser("train", parents=[common], help="train a heuristic network")
    p.add_argument("dataset")
    p.add_argument("--init", help="checkpoint to start from")
    training_opts(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=[common], help="evaluate a heuristic on instances")
    p.add_argument("instances", nargs="+")
    p.add_argument("--model")
    p.add_argument("--heuristic", choices=("zero", "base"), default="zero")
    p.add_argument("--budget", type=int)
    p.add_argument("--csv", default="eval.csv")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("curriculum", parents=[common], help="one round of training on the model's own solves")
    p.add_argument("instances", nargs="+")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--budget", type=int)
    training_opts(p)
    p.set_defaults(func=cmd_curriculum)

    p = sub.add_parser("bootstrap", parents=[common], help="learn from scratch on unsolved instances")
    p.add_argument("instances", nargs="+")
    p.add_argument("--bootstrap-epochs", type=int, default=4)
    p.add_argument("--budget", type=int)
    training_opts(p)
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("counterexample", parents=[common], help="show the L2 pathologies on two toy graphs")
    p.set_defaults(func=cmd_counterexample)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
