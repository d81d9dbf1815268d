"""Per-sample training objectives with analytic gradients w.r.t. student logits.

All functions take logits with the class axis last. A 1-D input yields a
scalar ``value``; a ``(B, C)`` batch yields one value per row. Batch
averaging is the caller's job. Teacher logits are constants throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hfdistill.errors import InvalidInputError
from hfdistill.geometry import GridFactorization
from hfdistill.wavelet import fold_padding, haar_forward, haar_inverse, pad_even


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 2.0
    beta: float = 2.0
    lambda_kd: float = 0.9
    temperature: float = 4.0

    def __post_init__(self):
        if not self.temperature > 0:
            raise InvalidInputError(f"temperature must be > 0, got {self.temperature}")
        if self.alpha < 0 or self.beta < 0:
            raise InvalidInputError(f"alpha and beta must be >= 0, got {self.alpha}, {self.beta}")
        if not 0.0 <= self.lambda_kd <= 1.0:
            raise InvalidInputError(f"lambda_kd must lie in [0, 1], got {self.lambda_kd}")


@dataclass(frozen=True)
class LossValue:
    value: float | np.ndarray
    grad: np.ndarray

    def __add__(self, other: "LossValue") -> "LossValue":
        return LossValue(self.value + other.value, self.grad + other.grad)

    def scale(self, k: float) -> "LossValue":
        return LossValue(k * self.value, k * self.grad)


def _as_logits(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (1, 2) or x.shape[-1] < 1:
        raise InvalidInputError(f"{name} must be (C,) or (B, C), got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return x


def _check_pair(teacher, student):
    t = _as_logits(teacher, "teacher_logits")
    s = _as_logits(student, "student_logits")
    if t.shape != s.shape:
        raise InvalidInputError(f"teacher {t.shape} and student {s.shape} shapes differ")
    return t, s


def _labels(label, s: np.ndarray) -> np.ndarray:
    y = np.asarray(label)
    if not np.issubdtype(y.dtype, np.integer):
        raise InvalidInputError(f"labels must be integers, got dtype {y.dtype}")
    if y.shape != s.shape[:-1]:
        raise InvalidInputError(f"label shape {y.shape} does not match logits {s.shape}")
    c = s.shape[-1]
    if np.any(y < 0) or np.any(y >= c):
        raise InvalidInputError(f"label out of range [0, {c})")
    return y


def _value(v: np.ndarray):
    return float(v) if v.ndim == 0 else v


def softmax_t(logits, temperature: float = 1.0) -> np.ndarray:
    if not temperature > 0:
        raise InvalidInputError(f"temperature must be > 0, got {temperature}")
    z = _as_logits(logits, "logits") / temperature
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def ce_loss(student_logits, label) -> LossValue:
    s = _as_logits(student_logits, "student_logits")
    y = _labels(label, s)
    logp = _log_softmax(s)
    picked = np.take_along_axis(logp, y[..., None], axis=-1)[..., 0]
    grad = np.exp(logp) - np.eye(s.shape[-1])[y]
    return LossValue(_value(-picked), grad)


def kl_softened(teacher_logits, student_logits, temperature: float) -> LossValue:
    """``KL(q_T || q_S)`` of temperature-softened distributions (no T^2 factor)."""
    t, s = _check_pair(teacher_logits, student_logits)
    log_qt = _log_softmax(t / temperature)
    log_qs = _log_softmax(s / temperature)
    qt = np.exp(log_qt)
    kl = np.sum(qt * (log_qt - log_qs), axis=-1)
    # roundoff can leave tiny negatives when the distributions coincide
    kl = np.maximum(kl, 0.0)
    grad = (np.exp(log_qs) - qt) / temperature
    return LossValue(_value(kl), grad)


def kd_loss(teacher_logits, student_logits, weights: LossWeights, label) -> LossValue:
    """Classic distillation: ``(1 - lam) CE + lam T^2 KL(q_T || q_S)``."""
    t, s = _check_pair(teacher_logits, student_logits)
    lam, temp = weights.lambda_kd, weights.temperature
    ce = ce_loss(s, label)
    kl = kl_softened(t, s, temp)
    return ce.scale(1.0 - lam) + kl.scale(lam * temp * temp)


def _band_l1(t, s, fact: GridFactorization, use_low: bool, use_high: bool) -> LossValue:
    if t.shape[-1] != fact.num_classes:
        raise InvalidInputError(
            f"logit length {t.shape[-1]} does not match grid for {fact.num_classes} classes"
        )
    lead = t.shape[:-1]
    # the transform is linear, so band(T) - band(S) == band(T - S)
    diff, pr, pc = pad_even((t - s).reshape(lead + fact.shape))
    bands = haar_forward(diff)
    keep = (use_low, use_high, use_high, use_high)
    total = np.zeros(lead)
    signs = []
    for band, on in zip(bands, keep):
        if on:
            total = total + np.abs(band).sum(axis=(-2, -1))
            signs.append(np.sign(band))
        else:
            signs.append(np.zeros_like(band))
    # d|T - S| / dS = -sign(T - S); the Haar adjoint is its inverse
    g = -fold_padding(haar_inverse(*signs), pr, pc)
    return LossValue(_value(total), g.reshape(lead + (fact.num_classes,)))


def detail_loss(teacher_logits, student_logits, fact: GridFactorization) -> LossValue:
    """Sum over LH, HL, HH of the L1 distance between teacher and student subbands."""
    t, s = _check_pair(teacher_logits, student_logits)
    return _band_l1(t, s, fact, use_low=False, use_high=True)


def ablation_band_loss(
    teacher_logits, student_logits, fact: GridFactorization, use_low: bool, use_high: bool
) -> LossValue:
    """L1 over a chosen subset of bands: LL if ``use_low``, the three detail bands if ``use_high``."""
    t, s = _check_pair(teacher_logits, student_logits)
    return _band_l1(t, s, fact, use_low=use_low, use_high=use_high)


def figkd_loss(
    teacher_logits, student_logits, label, weights: LossWeights, fact: GridFactorization
) -> LossValue:
    """``alpha * CE + beta * detail``, on raw (unsoftened) logits."""
    t, s = _check_pair(teacher_logits, student_logits)
    return ce_loss(s, label).scale(weights.alpha) + detail_loss(t, s, fact).scale(weights.beta)
