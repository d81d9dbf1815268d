"""Training configuration and its ``key = value`` file format.

One setting per line, ``#`` starts a comment, blank lines are ignored.
Unknown keys are rejected so typos fail loudly. Lists are comma-separated::

    variant = figkd
    alpha = 2
    seeds = 1, 2, 3
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from hfdistill.data import SyntheticSpec
from hfdistill.errors import InvalidInputError
from hfdistill.losses import LossWeights
from hfdistill.nn import SgdConfig

VARIANTS = ("ce", "kd", "figkd", "band")
DATA_SOURCES = ("synthetic", "csv")


class ConfigError(InvalidInputError):
    """Bad configuration file, flag, or value."""


@dataclass(frozen=True)
class TrainConfig:
    variant: str = "figkd"
    use_low: bool = False
    use_high: bool = True
    alpha: float = 2.0
    beta: float = 2.0
    lambda_kd: float = 0.9
    temperature: float = 4.0
    learning_rate: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 5e-4
    epochs: int = 200
    batch_size: int = 32
    teacher_hidden: int = 128
    student_hidden: int = 8
    seeds: tuple[int, ...] = (1, 2, 3)
    data: str = "synthetic"
    train_csv: str = ""
    test_csv: str = ""
    num_classes: int = 0
    num_superclasses: int = 5
    classes_per_superclass: int = 4
    input_dim: int = 32
    super_separation: float = 6.0
    fine_separation: float = 1.0
    noise_sigma: float = 0.3
    train_per_class: int = 100
    test_per_class: int = 50
    data_seed: int = 0
    class_permutation_seed: int = -1
    teacher_ckpt: str = ""
    sweep_alphas: tuple[float, ...] = (1.0, 2.0, 4.0, 6.0, 8.0)
    sweep_betas: tuple[float, ...] = (1.0, 2.0, 4.0, 6.0, 8.0)
    sweep_fixed_alpha: float = 1.0
    sweep_fixed_beta: float = 2.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.data not in DATA_SOURCES:
            raise ConfigError(f"data must be one of {DATA_SOURCES}, got {self.data!r}")
        if not self.seeds:
            raise ConfigError("seeds must not be empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError(f"seeds must be distinct, got {self.seeds}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.teacher_hidden < 1 or self.student_hidden < 1:
            raise ConfigError("hidden sizes must be >= 1")
        if self.data == "csv":
            if not (self.train_csv and self.test_csv):
                raise ConfigError("data = csv needs train_csv and test_csv")
            if self.num_classes < 1:
                raise ConfigError("data = csv needs num_classes >= 1")
        # surface invalid weights / optimizer / dataset values at load time
        self.loss_weights()
        self.sgd_config(0)
        if self.data == "synthetic":
            self.synthetic_spec()

    def loss_weights(self) -> LossWeights:
        try:
            return LossWeights(self.alpha, self.beta, self.lambda_kd, self.temperature)
        except InvalidInputError as exc:
            raise ConfigError(str(exc)) from None

    def sgd_config(self, seed: int) -> SgdConfig:
        try:
            return SgdConfig(self.learning_rate, self.momentum, self.weight_decay, seed)
        except InvalidInputError as exc:
            raise ConfigError(str(exc)) from None

    def synthetic_spec(self) -> SyntheticSpec:
        try:
            return SyntheticSpec(
                num_superclasses=self.num_superclasses,
                classes_per_superclass=self.classes_per_superclass,
                input_dim=self.input_dim,
                super_separation=self.super_separation,
                fine_separation=self.fine_separation,
                noise_sigma=self.noise_sigma,
                train_per_class=self.train_per_class,
                test_per_class=self.test_per_class,
                seed=self.data_seed,
            )
        except InvalidInputError as exc:
            raise ConfigError(str(exc)) from None

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(TrainConfig)}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int(text: str) -> int:
    value = float(text)
    if value != int(value):
        raise ValueError(f"not an integer: {text!r}")
    return int(value)


def parse_value(key: str, text) -> Any:
    """Convert a raw string (or already-typed value) for ``key``."""
    if key not in FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    kind = FIELD_TYPES[key]
    if not isinstance(text, str):
        return tuple(text) if kind.startswith("tuple") else text
    try:
        if kind == "bool":
            return _parse_bool(text)
        if kind == "int":
            return _parse_int(text)
        if kind == "float":
            return float(text)
        if kind == "tuple[int, ...]":
            return tuple(_parse_int(p) for p in text.split(",") if p.strip())
        if kind == "tuple[float, ...]":
            return tuple(float(p) for p in text.split(",") if p.strip())
        return text.strip()
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from None


def read_config_file(path: str | Path) -> dict[str, str]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    raw: dict[str, str] = {}
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in FIELD_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        if key in raw:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def build_config(raw: dict[str, Any] | None = None, base: TrainConfig | None = None) -> TrainConfig:
    values = {k: parse_value(k, v) for k, v in (raw or {}).items()}
    try:
        return dataclasses.replace(base or TrainConfig(), **values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path | None = None, overrides: dict[str, Any] | None = None) -> TrainConfig:
    """File values first, then ``overrides`` (e.g. command-line flags) on top."""
    raw = read_config_file(path) if path else {}
    raw.update(overrides or {})
    return build_config(raw)


def dump_config(cfg: TrainConfig) -> str:
    lines = []
    for key, value in cfg.to_dict().items():
        if isinstance(value, list):
            value = ", ".join(repr(v) for v in value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
