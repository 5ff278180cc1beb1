import csv
import subprocess
import sys

import numpy as np
import pytest

from lstar.dataset import read_dataset
from lstar.harness.cli import main
from lstar.harness.config import ConfigError, ExperimentConfig, load_config, parse_config_text, render_config
from lstar.harness.counterexample import run_counterexample
from lstar.harness.experiments import (
    Trainer,
    bootstrap,
    curriculum_round,
    evaluate,
    generate_instances,
    make_dataset,
    train,
)
from lstar.harness.heuristic import NeuralHeuristic
from lstar.domains import encode_batch
from lstar.losses import lstar_surrogate
from lstar.model import forward_batch, load_checkpoint, model_init

SMALL = dict(size=7, budget=5000, epochs=2, conv_layers=((4, 3),), hidden_width=8)


def small_config(**kw):
    return ExperimentConfig(**{**SMALL, **kw})


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# --- config -------------------------------------------------------------------


def test_config_round_trip(tmp_path):
    cfg = small_config(loss="l2", drop_dead_ends=True, margin=0.5)
    assert parse_config_text(render_config(cfg)) == cfg
    path = tmp_path / "c.txt"
    path.write_text("# comment\ndomain = sokoban\nconv-layers = 8x3, 4x1\n")
    loaded = load_config(path, seed=5, size=None)
    assert loaded.domain == "sokoban" and loaded.seed == 5 and loaded.size == 10
    assert loaded.conv_layers == ((8, 3), (4, 1))


@pytest.mark.parametrize(
    "text", ["loss = l3", "nonsense = 1", "size = 0", "drop_dead_ends = maybe", "size = ten", "just a line"]
)
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_output_dir_env(monkeypatch, tmp_path):
    monkeypatch.setenv("LSTAR_OUTPUT_DIR", str(tmp_path / "env"))
    assert ExperimentConfig(output_dir="x").resolved_output_dir() == tmp_path / "env"
    monkeypatch.delenv("LSTAR_OUTPUT_DIR")
    assert str(ExperimentConfig(output_dir="x").resolved_output_dir()) == "x"


# --- library procedures -------------------------------------------------------


def test_neural_heuristic_matches_batch_forward():
    cfg = small_config()
    inst = generate_instances(cfg, 1, 0)[0]
    params = model_init(cfg.model_config())
    h = NeuralHeuristic(params, inst)
    cells = inst.passable_cells()[:10]
    expected = forward_batch(params, encode_batch(inst, cells))
    np.testing.assert_allclose([h(c) for c in cells], expected)


def test_single_sample_overfit_mostly_decreases():
    cfg = small_config(lr=0.003)
    inst = generate_instances(cfg, 1, 0)[0]
    sample = make_dataset([inst], cfg).samples[0]
    trainer = Trainer(cfg, model_init(cfg.model_config()))
    x = encode_batch(inst, sample.states)
    losses = []
    for _ in range(51):
        losses.append(lstar_surrogate(sample, forward_batch(trainer.params, x))[0])
        trainer.epoch([sample], 0)
    steps = np.diff(losses)
    assert np.mean(steps <= 1e-12) >= 0.9
    assert losses[-1] < losses[0]


def test_zero_epochs_returns_initial_model():
    cfg = small_config(epochs=0)
    params = model_init(cfg.model_config())
    trained, rows = train([], cfg, params=params.copy())
    assert rows == [] and trained.theta.tobytes() == params.theta.tobytes()


def test_l2_training_uses_labels():
    cfg = small_config(loss="l2")
    instances = generate_instances(cfg, 3, 0)
    ds = make_dataset(instances, cfg)
    _, rows = train(ds.samples, cfg)
    assert len(rows) == 2 and all(r["l2"] != "" for r in rows)
    assert rows[1]["objective"] < rows[0]["objective"]


def test_evaluate_reports_gap_and_coverage():
    cfg = small_config()
    instances = generate_instances(cfg, 4, 0)
    report = evaluate("zero", instances, cfg.budget)
    assert report.coverage == 1.0
    assert report.mean_gap == 0.0
    tight = evaluate("zero", instances, 2)
    assert tight.coverage == 0.0 and tight.mean_gap is None


def test_curriculum_round_noop_and_growth():
    cfg = small_config(budget=3)
    instances = generate_instances(cfg, 3, 0)
    ds = make_dataset(instances, cfg.replace(budget=5000))
    params = model_init(cfg.model_config())
    same, ds2, report = curriculum_round(params, instances, ds, cfg)
    assert report.coverage == 0.0 and same is params and len(ds2) == 3

    cfg = small_config()
    fresh = generate_instances(cfg, 2, 100)
    params2, ds3, report = curriculum_round(params, fresh, ds, cfg)
    assert report.coverage == 1.0
    assert len(ds3) == 5
    assert params2.theta.tobytes() != params.theta.tobytes()
    # a second round over the same instances adds nothing new
    _, ds4, _ = curriculum_round(params2, fresh, ds3, cfg)
    assert len(ds4) == 5


def test_bootstrap_rows():
    cfg = small_config(budget=200)
    instances = generate_instances(cfg, 4, 0)
    _, rows = bootstrap(instances, cfg, epochs=2)
    assert [r["epoch"] for r in rows] == [0, 1, 2]
    assert all(r["total"] == 4 for r in rows)
    assert all(0.0 <= r["coverage"] <= 1.0 for r in rows)
    assert rows[-1]["train_samples"] >= rows[0]["solved"]


def test_counterexample_report():
    report = run_counterexample()
    assert report["off_path_pop_order"].split()[:2] == ["s0", "s3"]
    assert report["off_path_l2_on_plan"] == 0.0
    assert report["off_path_term1_hard"] > 0
    assert report["tied_open_f_after_first_expansion"] == "3 3"
    assert report["tied_expanded_larger-g"] < report["tied_expanded_fifo"]


# --- CLI ----------------------------------------------------------------------


def run_pipeline(out, loss="lstar"):
    common = ["--output-dir", str(out), "--size", "7"]
    cfg = out / "cfg.txt"
    out.mkdir(parents=True, exist_ok=True)
    cfg.write_text("conv_layers = 4x3\nhidden_width = 8\nbudget = 5000\n")
    base = ["--config", str(cfg), "--output-dir", str(out)]
    assert main(["generate", *common, "--count", "3", "--seed", "0"]) == 0
    assert main(["make-dataset", str(out / "instances"), *base]) == 0
    assert main(["train", str(out / "dataset.txt"), *base, "--epochs", "2", "--loss", loss]) == 0
    assert main(["evaluate", str(out / "instances"), *base, "--model", str(out / f"model-{loss}.ckpt")]) == 0


def test_cli_pipeline(tmp_path, capsys):
    out = tmp_path / "run"
    run_pipeline(out)
    assert len(list((out / "instances").glob("*.txt"))) == 3
    assert len(read_dataset(out / "dataset.txt")) == 3
    rows = read_csv(out / "train-lstar.csv")
    assert [r["epoch"] for r in rows] == ["1", "2"]
    assert read_csv(out / "eval-summary.csv")[0]["instances"] == "3"
    assert load_checkpoint(out / "model-lstar.ckpt").config.hidden_width == 8
    assert "hidden_width = 8" in (out / "config.txt").read_text()
    capsys.readouterr()


def test_cli_is_deterministic(tmp_path):
    for name in ("a", "b"):
        run_pipeline(tmp_path / name)
    for f in ("train-lstar.csv", "eval.csv", "model-lstar.ckpt", "dataset.txt"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes(), f


def test_cli_curriculum_and_bootstrap(tmp_path):
    out = tmp_path / "run"
    run_pipeline(out)
    base = ["--config", str(out / "cfg.txt"), "--output-dir", str(out)]
    assert main(["generate", "--output-dir", str(tmp_path / "more"), "--size", "7", "--count", "2", "--seed", "50"]) == 0
    more = tmp_path / "more" / "instances"
    assert main(["curriculum", str(more), *base, "--model", str(out / "model-lstar.ckpt"),
                 "--dataset", str(out / "dataset.txt"), "--epochs", "1"]) == 0
    grown = read_dataset(out / "dataset-curriculum.txt")
    assert len(grown) == 5
    assert main(["bootstrap", str(more), *base, "--bootstrap-epochs", "1", "--budget", "100"]) == 0
    assert len(read_csv(out / "bootstrap-lstar.csv")) == 2


def test_cli_solve_and_counterexample(tmp_path):
    out = tmp_path / "run"
    run_pipeline(out)
    assert main(["solve", str(out / "instances"), "--output-dir", str(out), "--heuristic", "zero"]) == 0
    assert all(r["solved"] == "1" for r in read_csv(out / "solve.csv"))
    assert main(["counterexample", "--output-dir", str(out)]) == 0
    assert read_csv(out / "counterexample.csv")[0]["tied_open_f_after_first_expansion"] == "3 3"


def test_module_entry_point(tmp_path):
    res = subprocess.run(
        [sys.executable, "-m", "lstar", "counterexample", "--output-dir", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert res.returncode == 0, res.stderr
    assert "tied_expanded_fifo" in res.stdout


def test_start_is_goal_reports_zero_cost(tmp_path):
    inst = generate_instances(small_config(size=2, teleport_pairs=0), 1, 0)[0]
    assert inst.start == inst.goal
    row = evaluate("zero", [inst], 10).rows[0]
    assert row["solved"] == 1 and row["plan_length"] == 0.0 and row["gap"] == 0.0
