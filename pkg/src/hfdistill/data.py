"""Synthetic fine-grained datasets, a CSV loader, and seeded batching."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from hfdistill.errors import InvalidInputError


class DataFormatError(InvalidInputError):
    """A CSV dataset file could not be parsed."""


@dataclass(frozen=True)
class SyntheticSpec:
    """Superclass clusters that each hold a few close-together fine classes.

    ``fine_separation`` may be 0, which makes classes inside a superclass
    statistically identical.
    """

    num_superclasses: int = 5
    classes_per_superclass: int = 4
    input_dim: int = 32
    super_separation: float = 6.0
    fine_separation: float = 1.0
    noise_sigma: float = 0.3
    train_per_class: int = 100
    test_per_class: int = 50
    seed: int = 0

    def __post_init__(self):
        for name in ("num_superclasses", "classes_per_superclass", "input_dim",
                     "train_per_class", "test_per_class"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise InvalidInputError(f"{name} must be a positive integer, got {v!r}")
        if not self.super_separation > 0:
            raise InvalidInputError(f"super_separation must be > 0, got {self.super_separation}")
        if not self.noise_sigma > 0:
            raise InvalidInputError(f"noise_sigma must be > 0, got {self.noise_sigma}")
        if not 0 <= self.fine_separation < self.super_separation:
            raise InvalidInputError(
                "need 0 <= fine_separation < super_separation, got "
                f"{self.fine_separation} and {self.super_separation}"
            )

    @property
    def num_classes(self) -> int:
        return self.num_superclasses * self.classes_per_superclass


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    split: str = "train"

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels)
        if x.ndim != 2 or y.shape != (x.shape[0],):
            raise InvalidInputError(f"features {x.shape} and labels {y.shape} do not line up")
        if y.size and not np.issubdtype(y.dtype, np.integer):
            raise InvalidInputError(f"labels must be integers, got dtype {y.dtype}")
        y = y.astype(np.int64)
        if np.any(y < 0) or np.any(y >= self.num_classes):
            raise InvalidInputError(f"labels must lie in [0, {self.num_classes})")
        if not np.all(np.isfinite(x)):
            raise InvalidInputError("features contain non-finite values")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def input_dim(self) -> int:
        return self.features.shape[1]


def class_centers(spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    """Superclass centers on a sphere, then fine offsets of norm ``fine_separation``.

    Offsets within a superclass are orthonormalized (QR) when there are no
    more classes than dimensions, so sibling classes sit equally far apart.
    """
    s, k, d = spec.num_superclasses, spec.classes_per_superclass, spec.input_dim
    supers = rng.standard_normal((s, d))
    supers *= spec.super_separation / np.linalg.norm(supers, axis=1, keepdims=True)
    centers = np.empty((s * k, d))
    for i in range(s):
        raw = rng.standard_normal((d, k))
        if k <= d:
            q, _ = np.linalg.qr(raw)
            offsets = q.T
        else:
            offsets = raw.T / np.linalg.norm(raw.T, axis=1, keepdims=True)
        centers[i * k:(i + 1) * k] = supers[i] + spec.fine_separation * offsets
    return centers


def superclass_of(spec: SyntheticSpec, labels) -> np.ndarray:
    return np.asarray(labels) // spec.classes_per_superclass


def _sample(centers, per_class, sigma, rng, split, num_classes):
    labels = np.repeat(np.arange(centers.shape[0]), per_class)
    noise = sigma * rng.standard_normal((labels.shape[0], centers.shape[1]))
    return Dataset(centers[labels] + noise, labels, num_classes, split)


def generate_synthetic(spec: SyntheticSpec) -> tuple[Dataset, Dataset]:
    centers_rng, train_rng, test_rng = (
        np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(spec.seed).spawn(3)
    )
    centers = class_centers(spec, centers_rng)
    c = spec.num_classes
    train = _sample(centers, spec.train_per_class, spec.noise_sigma, train_rng, "train", c)
    test = _sample(centers, spec.test_per_class, spec.noise_sigma, test_rng, "test", c)
    return train, test


def synthetic_centers(spec: SyntheticSpec) -> np.ndarray:
    """The class centers :func:`generate_synthetic` samples around."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(spec.seed).spawn(3)[0]))
    return class_centers(spec, rng)


def load_csv(path: str | Path, num_classes: int, split: str = "train") -> Dataset:
    """Read ``label,f1,...,fd`` rows (no header). Errors cite 1-based line numbers."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    labels, rows, dim = [], [], None
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        fields = line.split(",")
        try:
            label = int(fields[0])
            values = [float(f) for f in fields[1:]]
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from None
        if dim is None:
            dim = len(values)
            if dim == 0:
                raise DataFormatError(f"{path}:{lineno}: row has a label but no features")
        elif len(values) != dim:
            raise DataFormatError(
                f"{path}:{lineno}: expected {dim} features, found {len(values)}"
            )
        if not 0 <= label < num_classes:
            raise DataFormatError(
                f"{path}:{lineno}: label {label} outside [0, {num_classes})"
            )
        if not all(math.isfinite(v) for v in values):
            raise DataFormatError(f"{path}:{lineno}: non-finite feature value")
        labels.append(label)
        rows.append(values)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return Dataset(np.array(rows), np.array(labels, dtype=np.int64), num_classes, split)


def save_csv(data: Dataset, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for label, row in zip(data.labels, data.features):
            writer.writerow([int(label)] + [f"{v:.9g}" for v in row])


def permute_classes(data: Dataset, perm: np.ndarray) -> Dataset:
    """Relabel class ``c`` as ``perm[c]``; changes only where classes land on the logit grid."""
    perm = np.asarray(perm)
    if sorted(perm.tolist()) != list(range(data.num_classes)):
        raise InvalidInputError("perm must be a permutation of the class indices")
    return Dataset(data.features, perm[data.labels], data.num_classes, data.split)


def split_batches(data: Dataset, batch_size: int, seed) -> list[np.ndarray]:
    """Seeded permutation of ``range(len(data))`` cut into consecutive batches.

    ``seed`` is anything ``numpy.random.default_rng`` accepts, e.g. an int or
    an ``(run_seed, epoch)`` tuple.
    """
    if int(batch_size) != batch_size or batch_size < 1:
        raise InvalidInputError(f"batch_size must be a positive integer, got {batch_size!r}")
    order = np.random.default_rng(seed).permutation(len(data))
    return [order[i:i + batch_size] for i in range(0, len(order), batch_size)]
