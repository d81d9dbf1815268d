"""Band ablation and loss-weight sweeps over seeds, with shared teachers per seed."""

from __future__ import annotations

import logging
import math
import statistics
from pathlib import Path

from hfdistill.errors import InvalidInputError
from hfdistill.geometry import factorize_grid
from hfdistill.harness.config import TrainConfig
from hfdistill.harness.training import (
    RunResult,
    analyze_frequency_logits,
    distill_student,
    load_datasets,
    save_run,
    train_teacher_seed,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1"

# (name, config overrides, low flag, high flag); flags are None for non-band rows
ABLATION_VARIANTS = (
    ("ce", {"variant": "ce"}, False, False),
    ("band_low", {"variant": "band", "use_low": True, "use_high": False}, True, False),
    ("band_high", {"variant": "band", "use_low": False, "use_high": True}, False, True),
    ("band_both", {"variant": "band", "use_low": True, "use_high": True}, True, True),
    ("kd", {"variant": "kd"}, None, None),
)

FREQ_FIELDS = ("full_accuracy", "hf_agree_full", "ll_agree_full", "hf_agree_label", "ll_agree_label")


def summarize(values: list[float]) -> dict:
    mean = math.fsum(values) / len(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return {"mean": mean, "std": std}


def _dataset_echo(train, test) -> dict:
    fact = factorize_grid(train.num_classes)
    return {
        "num_classes": train.num_classes,
        "input_dim": train.input_dim,
        "grid": [fact.height, fact.width],
        "train_size": len(train),
        "test_size": len(test),
    }


def _teachers(cfg, data, ckpt_dir):
    teachers = []
    for seed in cfg.seeds:
        run = train_teacher_seed(cfg, *data, seed)
        if ckpt_dir is not None:
            save_run(run, Path(ckpt_dir) / f"teacher_seed{seed}.json")
        teachers.append(run)
    return teachers


def _teacher_block(teachers: list[RunResult]) -> dict:
    runs = [{"seed": t.seed, "accuracy": t.accuracy, "checkpoint_sha256": t.checkpoint_sha256}
            for t in teachers]
    return {"runs": runs, **summarize([t.accuracy for t in teachers])}


def _freq_block(tag: str, per_seed: list[tuple[int, dict]]) -> dict:
    block = {"model_tag": tag, "runs": [{"seed": s, **fa} for s, fa in per_seed]}
    for name in FREQ_FIELDS:
        block[f"mean_{name}"] = math.fsum(fa[name] for _, fa in per_seed) / len(per_seed)
    return block


def run_ablation(cfg: TrainConfig, ckpt_dir: str | Path | None = None) -> dict:
    """Train the four band-selection rows plus the KD baseline for every seed.

    All variants of a seed distill from that seed's single teacher; each row
    records the teacher checkpoint digest so the reuse is auditable.
    """
    data = load_datasets(cfg)
    train, test = data
    if ckpt_dir is not None:
        Path(ckpt_dir).mkdir(parents=True, exist_ok=True)
    teachers = _teachers(cfg, data, ckpt_dir)
    variants = []
    freq = {"teacher": [(t.seed, analyze_frequency_logits(t.params, test, "teacher").to_dict())
                        for t in teachers]}
    for name, overrides, low, high in ABLATION_VARIANTS:
        vcfg = cfg.replace(**overrides)
        runs = []
        for teacher in teachers:
            student = distill_student(vcfg, teacher, teacher.seed, data)
            if ckpt_dir is not None:
                save_run(student, Path(ckpt_dir) / f"student_{name}_seed{teacher.seed}.json")
            runs.append({
                "seed": teacher.seed,
                "accuracy": student.accuracy,
                "teacher_sha256": teacher.checkpoint_sha256,
                "checkpoint_sha256": student.checkpoint_sha256,
            })
            fa = analyze_frequency_logits(student.params, test, name).to_dict()
            freq.setdefault(name, []).append((teacher.seed, fa))
        variants.append({
            "name": name,
            "low": low,
            "high": high,
            "runs": runs,
            **summarize([r["accuracy"] for r in runs]),
        })
    return {
        "schema_version": SCHEMA_VERSION,
        "report_type": "ablation",
        "config": cfg.to_dict(),
        "dataset": _dataset_echo(train, test),
        "teacher": _teacher_block(teachers),
        "variants": variants,
        "frequency_agreement": [_freq_block(tag, rows) for tag, rows in freq.items()],
    }


def sweep_points(cfg: TrainConfig, alpha_values, beta_values) -> list[tuple[str, float, float]]:
    """The two one-dimensional sweeps: beta with alpha fixed, then alpha with beta fixed."""
    alpha_values, beta_values = list(alpha_values), list(beta_values)
    if not alpha_values or not beta_values:
        raise InvalidInputError("sweep value lists must be nonempty")
    points = [("beta", cfg.sweep_fixed_alpha, b) for b in beta_values]
    points += [("alpha", a, cfg.sweep_fixed_beta) for a in alpha_values]
    for _, a, b in points:
        if a < 0 or b < 0:
            raise InvalidInputError(f"loss weights must be >= 0, got alpha={a}, beta={b}")
        if a == 0 and b == 0:
            raise InvalidInputError("alpha = beta = 0 leaves an empty objective")
    return points


def _best(points: list[dict]) -> dict:
    # first maximum wins, so ties resolve to the earliest point
    best = max(points, key=lambda p: p["mean"])
    return {"alpha": best["alpha"], "beta": best["beta"], "mean": best["mean"]}


def run_weight_sweep(cfg: TrainConfig, alpha_values=None, beta_values=None) -> dict:
    alpha_values = list(cfg.sweep_alphas if alpha_values is None else alpha_values)
    beta_values = list(cfg.sweep_betas if beta_values is None else beta_values)
    points = sweep_points(cfg, alpha_values, beta_values)
    data = load_datasets(cfg)
    teachers = _teachers(cfg, data, None)
    sweeps = {"beta": [], "alpha": []}
    for axis, a, b in points:
        pcfg = cfg.replace(variant="figkd", alpha=a, beta=b)
        runs = [{"seed": t.seed, "accuracy": distill_student(pcfg, t, t.seed, data).accuracy}
                for t in teachers]
        sweeps[axis].append({"alpha": a, "beta": b, "runs": runs,
                             **summarize([r["accuracy"] for r in runs])})
    blocks = [
        {"name": "beta_sweep", "fixed": {"alpha": cfg.sweep_fixed_alpha}, "points": sweeps["beta"],
         "best": _best(sweeps["beta"])},
        {"name": "alpha_sweep", "fixed": {"beta": cfg.sweep_fixed_beta}, "points": sweeps["alpha"],
         "best": _best(sweeps["alpha"])},
    ]
    return {
        "schema_version": SCHEMA_VERSION,
        "report_type": "sweep",
        "config": cfg.to_dict(),
        "dataset": _dataset_echo(*data),
        "alpha_values": alpha_values,
        "beta_values": beta_values,
        "teacher": _teacher_block(teachers),
        "sweeps": blocks,
        "best": _best(sweeps["beta"] + sweeps["alpha"]),
    }
