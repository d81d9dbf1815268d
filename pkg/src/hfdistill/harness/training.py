"""Teacher training, student distillation, and the logit frequency diagnosis."""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from hfdistill.data import Dataset, generate_synthetic, load_csv, permute_classes, split_batches
from hfdistill.errors import InvalidInputError, TrainingDivergedError
from hfdistill.geometry import GridFactorization, factorize_grid, flatten_grid, reshape_logits
from hfdistill.harness.config import TrainConfig
from hfdistill.losses import (
    LossValue,
    ablation_band_loss,
    ce_loss,
    figkd_loss,
    kd_loss,
)
from hfdistill.nn import (
    MlpParams,
    backward,
    checkpoint_bytes,
    forward,
    init_params,
    load_checkpoint,
    predict,
    sgd_step,
)
from hfdistill.wavelet import dwt2_haar, reconstruct_from_bands

log = logging.getLogger(__name__)

# Objective(student_logits, labels, teacher_logits) -> per-sample LossValue
Objective = Callable[[np.ndarray, np.ndarray, "np.ndarray | None"], LossValue]

TEACHER_STREAM = 0
STUDENT_STREAM = 1


def derive_seed(seed: int, stream: int) -> int:
    """Independent 64-bit seed for one (run seed, role) pair."""
    return int(np.random.SeedSequence([seed, stream]).generate_state(1, np.uint64)[0])


def load_datasets(cfg: TrainConfig) -> tuple[Dataset, Dataset]:
    """Train/test splits per ``cfg``, with the optional class relabeling applied.

    ``class_permutation_seed >= 0`` shuffles which logit-grid cell each class
    occupies, which is the only way class order can reach the detail loss.
    """
    if cfg.data == "csv":
        train = load_csv(cfg.train_csv, cfg.num_classes, "train")
        test = load_csv(cfg.test_csv, cfg.num_classes, "test")
    else:
        train, test = generate_synthetic(cfg.synthetic_spec())
    if cfg.class_permutation_seed >= 0:
        perm = np.random.default_rng(cfg.class_permutation_seed).permutation(train.num_classes)
        train, test = permute_classes(train, perm), permute_classes(test, perm)
    return train, test


def accuracy(params: MlpParams, data: Dataset) -> float:
    # np.argmax breaks ties toward the lowest class index
    pred = np.argmax(predict(params, data.features), axis=1)
    return float(np.mean(pred == data.labels))


def make_objective(cfg: TrainConfig, fact: GridFactorization) -> tuple[Objective, bool]:
    """Per-sample objective for ``cfg.variant`` and whether it needs teacher logits."""
    w = cfg.loss_weights()
    if cfg.variant == "ce":
        if w.alpha == 0:
            raise InvalidInputError("variant ce with alpha = 0 has nothing to train on")
        return (lambda s, y, t: ce_loss(s, y).scale(w.alpha)), False
    if cfg.variant == "kd":
        return (lambda s, y, t: kd_loss(t, s, w, y)), True
    if w.alpha == 0 and w.beta == 0:
        raise InvalidInputError("alpha = beta = 0 leaves an empty objective")
    if cfg.variant == "figkd":
        return (lambda s, y, t: figkd_loss(t, s, y, w, fact)), True
    use_low, use_high = cfg.use_low, cfg.use_high

    def band(s, y, t):
        ce = ce_loss(s, y).scale(w.alpha)
        if not (use_low or use_high):
            return ce
        return ce + ablation_band_loss(t, s, fact, use_low, use_high).scale(w.beta)

    return band, True


def teacher_objective(s, y, t) -> LossValue:
    return ce_loss(s, y)


@dataclass
class FitResult:
    params: MlpParams
    epoch_losses: list[float] = field(default_factory=list)


def fit(
    params: MlpParams,
    train: Dataset,
    objective: Objective,
    cfg: TrainConfig,
    batch_seed: int,
    teacher_logits: np.ndarray | None = None,
) -> FitResult:
    """Minibatch training: batch loss is the mean of per-sample objectives."""
    sgd = cfg.sgd_config(params.seed)
    losses = []
    for epoch in range(cfg.epochs):
        total, count = 0.0, 0
        for idx in split_batches(train, cfg.batch_size, (batch_seed, epoch)):
            x, y = train.features[idx], train.labels[idx]
            t = None if teacher_logits is None else teacher_logits[idx]
            with np.errstate(over="ignore", invalid="ignore"):
                logits, cache = forward(params, x)
            if not np.all(np.isfinite(logits)):
                raise TrainingDivergedError(f"logits became non-finite in epoch {epoch}", epoch)
            loss = objective(logits, y, t)
            batch_loss = float(np.mean(loss.value))
            if not np.isfinite(batch_loss):
                raise TrainingDivergedError(f"loss became non-finite in epoch {epoch}", epoch)
            grads = backward(params, cache, loss.grad / len(idx))
            try:
                sgd_step(params, grads, sgd)
            except TrainingDivergedError as exc:
                raise TrainingDivergedError(f"epoch {epoch}: {exc}", epoch) from None
            total += batch_loss * len(idx)
            count += len(idx)
        losses.append(total / count)
    return FitResult(params, losses)


@dataclass
class RunResult:
    seed: int
    params: MlpParams
    accuracy: float
    checkpoint_sha256: str
    epoch_losses: list[float]

    def checkpoint(self) -> bytes:
        return checkpoint_bytes(self.params, {"seed": self.seed})


def _digest(params: MlpParams, seed: int) -> str:
    return hashlib.sha256(checkpoint_bytes(params, {"seed": seed})).hexdigest()


def train_teacher_seed(cfg: TrainConfig, train: Dataset, test: Dataset, seed: int) -> RunResult:
    params = init_params(train.input_dim, cfg.teacher_hidden, train.num_classes,
                         derive_seed(seed, TEACHER_STREAM))
    result = fit(params, train, teacher_objective, cfg, derive_seed(seed, TEACHER_STREAM))
    acc = accuracy(result.params, test)
    log.info("teacher seed=%d acc=%.4f", seed, acc)
    return RunResult(seed, result.params, acc, _digest(result.params, seed), result.epoch_losses)


def train_teacher(cfg: TrainConfig, data: tuple[Dataset, Dataset] | None = None) -> list[RunResult]:
    """CE-train one teacher per seed in ``cfg.seeds``."""
    train, test = data or load_datasets(cfg)
    return [train_teacher_seed(cfg, train, test, s) for s in cfg.seeds]


def _resolve_teacher(teacher) -> MlpParams:
    if isinstance(teacher, MlpParams):
        return teacher
    if isinstance(teacher, RunResult):
        return teacher.params
    return load_checkpoint(teacher)[0]


def distill_student(
    cfg: TrainConfig,
    teacher,
    seed: int,
    data: tuple[Dataset, Dataset] | None = None,
) -> RunResult:
    """Train one student with ``cfg.variant`` against a fixed teacher.

    ``teacher`` may be a checkpoint path, :class:`MlpParams` or a teacher
    :class:`RunResult`. Variants that ignore the teacher still accept one.
    """
    train, test = data or load_datasets(cfg)
    fact = factorize_grid(train.num_classes)
    objective, needs_teacher = make_objective(cfg, fact)
    teacher_logits = None
    if teacher is not None:
        tparams = _resolve_teacher(teacher)
        if tparams.num_classes != train.num_classes or tparams.input_dim != train.input_dim:
            raise InvalidInputError(
                f"teacher is {tparams.input_dim}->{tparams.num_classes}, dataset is "
                f"{train.input_dim}->{train.num_classes}"
            )
        teacher_logits = predict(tparams, train.features)
    elif needs_teacher:
        raise InvalidInputError(f"variant {cfg.variant} needs a teacher checkpoint")
    params = init_params(train.input_dim, cfg.student_hidden, train.num_classes,
                         derive_seed(seed, STUDENT_STREAM))
    result = fit(params, train, objective, cfg, derive_seed(seed, STUDENT_STREAM), teacher_logits)
    acc = accuracy(result.params, test)
    log.info("student variant=%s seed=%d acc=%.4f", cfg.variant, seed, acc)
    return RunResult(seed, result.params, acc, _digest(result.params, seed), result.epoch_losses)


def first_batch_losses(cfg: TrainConfig, teacher, seed: int, data=None) -> dict[str, float]:
    """Band losses on the first training batch at student initialization."""
    train, _ = data or load_datasets(cfg)
    fact = factorize_grid(train.num_classes)
    tparams = _resolve_teacher(teacher)
    idx = split_batches(train, cfg.batch_size, (derive_seed(seed, STUDENT_STREAM), 0))[0]
    student = init_params(train.input_dim, cfg.student_hidden, train.num_classes,
                          derive_seed(seed, STUDENT_STREAM))
    t = predict(tparams, train.features[idx])
    s = predict(student, train.features[idx])
    out = {}
    for name, low, high in (("low", True, False), ("high", False, True), ("both", True, True)):
        out[name] = float(np.mean(ablation_band_loss(t, s, fact, low, high).value))
    return out


@dataclass
class FrequencyAgreement:
    """How often band-limited reconstructions of the logits keep the prediction."""

    model_tag: str
    num_samples: int
    full_accuracy: float
    hf_agree_full: float
    ll_agree_full: float
    hf_agree_label: float
    ll_agree_label: float
    per_class: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "model_tag": self.model_tag,
            "num_samples": self.num_samples,
            "full_accuracy": self.full_accuracy,
            "hf_agree_full": self.hf_agree_full,
            "ll_agree_full": self.ll_agree_full,
            "hf_agree_label": self.hf_agree_label,
            "ll_agree_label": self.ll_agree_label,
            "per_class": self.per_class,
        }


def band_predictions(logits: np.ndarray, fact: GridFactorization) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Argmax of full, LL-only and HF-only reconstructions (ties -> lowest index)."""
    bands = dwt2_haar(reshape_logits(logits, fact))
    low = flatten_grid(reconstruct_from_bands(bands, keep_ll=True, keep_hf=False))
    high = flatten_grid(reconstruct_from_bands(bands, keep_ll=False, keep_hf=True))
    return logits.argmax(axis=-1), low.argmax(axis=-1), high.argmax(axis=-1)


def analyze_frequency_logits(model, dataset: Dataset, model_tag: str = "model") -> FrequencyAgreement:
    params = _resolve_teacher(model)
    if params.num_classes != dataset.num_classes:
        raise InvalidInputError(
            f"model has {params.num_classes} classes, dataset has {dataset.num_classes}"
        )
    fact = factorize_grid(dataset.num_classes)
    full, low, high = band_predictions(predict(params, dataset.features), fact)
    y = dataset.labels
    per_class = []
    for c in range(dataset.num_classes):
        mask = y == c
        n = int(mask.sum())
        if n == 0:
            continue
        per_class.append({
            "class": c,
            "n": n,
            "full_accuracy": float(np.mean(full[mask] == c)),
            "hf_agree_label": float(np.mean(high[mask] == c)),
            "ll_agree_label": float(np.mean(low[mask] == c)),
        })
    return FrequencyAgreement(
        model_tag=model_tag,
        num_samples=len(dataset),
        full_accuracy=float(np.mean(full == y)),
        hf_agree_full=float(np.mean(high == full)),
        ll_agree_full=float(np.mean(low == full)),
        hf_agree_label=float(np.mean(high == y)),
        ll_agree_label=float(np.mean(low == y)),
        per_class=per_class,
    )


def save_run(run: RunResult, path: str | Path) -> str:
    data = run.checkpoint()
    Path(path).write_bytes(data)
    return hashlib.sha256(data).hexdigest()
