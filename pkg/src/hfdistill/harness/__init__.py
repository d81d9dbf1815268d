"""Experiment orchestration: training, ablations, sweeps, reports and the CLI."""

from hfdistill.harness.config import ConfigError, TrainConfig, load_config
from hfdistill.harness.experiments import run_ablation, run_weight_sweep
from hfdistill.harness.report import emit_report, render_table
from hfdistill.harness.training import (
    FrequencyAgreement,
    analyze_frequency_logits,
    distill_student,
    train_teacher,
)

__all__ = [
    "ConfigError",
    "FrequencyAgreement",
    "TrainConfig",
    "analyze_frequency_logits",
    "distill_student",
    "emit_report",
    "load_config",
    "render_table",
    "run_ablation",
    "run_weight_sweep",
    "train_teacher",
]
