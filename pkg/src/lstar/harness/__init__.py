from .config import ExperimentConfig, load_config, parse_config_text, render_config
from .counterexample import run_counterexample
from .experiments import (
    EvalReport,
    Trainer,
    bootstrap,
    curriculum_round,
    evaluate,
    generate_instances,
    make_dataset,
    train,
)
from .heuristic import NeuralHeuristic
