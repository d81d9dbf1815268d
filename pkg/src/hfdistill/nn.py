"""Two-layer ReLU perceptron with hand-written backprop and momentum SGD.

Weights are drawn from numpy's PCG64 bit generator (``Generator(PCG64(seed))``,
standard normal, ``w1`` first then ``w2``) scaled by ``sqrt(2 / fan_in)``.
The generator identity is part of the checkpoint contract: the same seed
reproduces the same bits on a given numpy release.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from hfdistill.errors import ContractViolationError, InvalidInputError, TrainingDivergedError

PARAM_NAMES = ("w1", "b1", "w2", "b2")
CHECKPOINT_FORMAT = "hfdistill-mlp"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class SgdConfig:
    learning_rate: float = 0.05
    momentum: float = 0.9
    weight_decay: float = 5e-4
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InvalidInputError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise InvalidInputError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise InvalidInputError(f"weight_decay must be >= 0, got {self.weight_decay}")


@dataclass
class MlpParams:
    w1: np.ndarray  # (hidden, input)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (classes, hidden)
    b2: np.ndarray  # (classes,)
    velocity: dict[str, np.ndarray] = field(default_factory=dict)
    seed: int = 0
    step: int = 0

    def __post_init__(self):
        hidden, inp = np.shape(self.w1)
        classes, hidden2 = np.shape(self.w2)
        if hidden2 != hidden or np.shape(self.b1) != (hidden,) or np.shape(self.b2) != (classes,):
            raise InvalidInputError(
                "inconsistent shapes: "
                + ", ".join(f"{n}={np.shape(getattr(self, n))}" for n in PARAM_NAMES)
            )
        for name in PARAM_NAMES:
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
            if name not in self.velocity:
                self.velocity[name] = np.zeros_like(getattr(self, name))
            elif self.velocity[name].shape != getattr(self, name).shape:
                raise InvalidInputError(f"momentum buffer for {name} has the wrong shape")

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def num_classes(self) -> int:
        return self.w2.shape[0]

    def tensors(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}


@dataclass(frozen=True)
class MlpGrads:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def tensors(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}


@dataclass(frozen=True)
class ForwardCache:
    x: np.ndarray
    pre: np.ndarray
    hidden: np.ndarray
    owner: int
    step: int


def init_params(input_dim: int, hidden_dim: int, num_classes: int, seed: int) -> MlpParams:
    for name, v in (("input_dim", input_dim), ("hidden_dim", hidden_dim), ("num_classes", num_classes)):
        if int(v) != v or v < 1:
            raise InvalidInputError(f"{name} must be a positive integer, got {v!r}")
    rng = np.random.Generator(np.random.PCG64(seed))
    w1 = rng.standard_normal((hidden_dim, input_dim)) * np.sqrt(2.0 / input_dim)
    w2 = rng.standard_normal((num_classes, hidden_dim)) * np.sqrt(2.0 / hidden_dim)
    return MlpParams(w1, np.zeros(hidden_dim), w2, np.zeros(num_classes), seed=int(seed))


def forward(params: MlpParams, x) -> tuple[np.ndarray, ForwardCache]:
    """``logits = w2 @ relu(w1 @ x + b1) + b2`` for ``x`` of shape (d,) or (B, d)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (1, 2) or x.shape[-1] != params.input_dim:
        raise InvalidInputError(f"expected input with last dim {params.input_dim}, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("input contains non-finite values")
    pre = x @ params.w1.T + params.b1
    hidden = np.maximum(pre, 0.0)
    logits = hidden @ params.w2.T + params.b2
    return logits, ForwardCache(x, pre, hidden, owner=id(params), step=params.step)


def predict(params: MlpParams, x) -> np.ndarray:
    return forward(params, x)[0]


def backward(params: MlpParams, cache: ForwardCache, grad_logits) -> MlpGrads:
    """Reverse-mode gradients, summed over the batch axis if present."""
    if cache.owner != id(params) or cache.step != params.step:
        raise ContractViolationError("forward cache does not belong to these parameters")
    g = np.asarray(grad_logits, dtype=np.float64)
    if g.shape != cache.pre.shape[:-1] + (params.num_classes,):
        raise ContractViolationError(f"grad shape {g.shape} does not match the cached forward")
    x, hidden = np.atleast_2d(cache.x), np.atleast_2d(cache.hidden)
    g2 = np.atleast_2d(g)
    gw2 = g2.T @ hidden
    gb2 = g2.sum(axis=0)
    # ReLU subgradient at exactly 0 is 0
    gpre = (g2 @ params.w2) * (np.atleast_2d(cache.pre) > 0)
    gw1 = gpre.T @ x
    gb1 = gpre.sum(axis=0)
    return MlpGrads(gw1, gb1, gw2, gb2)


def sgd_step(params: MlpParams, grads: MlpGrads, cfg: SgdConfig) -> MlpParams:
    """``v <- m v + g + wd p``; ``p <- p - lr v``. Updates ``params`` in place."""
    new_v, new_p = {}, {}
    for name in PARAM_NAMES:
        p = getattr(params, name)
        g = getattr(grads, name)
        if g.shape != p.shape:
            raise InvalidInputError(f"gradient for {name} has shape {g.shape}, expected {p.shape}")
        v = cfg.momentum * params.velocity[name] + g + cfg.weight_decay * p
        new_v[name] = v
        new_p[name] = p - cfg.learning_rate * v
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(new_p[name]))):
            raise TrainingDivergedError(f"non-finite update for {name} at step {params.step}")
    for name in PARAM_NAMES:
        setattr(params, name, new_p[name])
        params.velocity[name] = new_v[name]
    params.step += 1
    return params


def _tensor_record(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "data": a.ravel().tolist()}


def _tensor_from(rec: dict) -> np.ndarray:
    return np.asarray(rec["data"], dtype=np.float64).reshape(rec["shape"])


def checkpoint_bytes(params: MlpParams, meta: dict | None = None) -> bytes:
    # json writes floats with repr, which round-trips float64 exactly
    record = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "dims": {
            "input_dim": params.input_dim,
            "hidden_dim": params.hidden_dim,
            "num_classes": params.num_classes,
        },
        "seed": params.seed,
        "step": params.step,
        "tensors": {n: _tensor_record(a) for n, a in params.tensors().items()},
        "velocity": {n: _tensor_record(params.velocity[n]) for n in PARAM_NAMES},
        "meta": meta or {},
    }
    return (json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


def save_checkpoint(params: MlpParams, path: str | Path, meta: dict | None = None) -> str:
    """Write the checkpoint and return its sha256 hex digest."""
    data = checkpoint_bytes(params, meta)
    Path(path).write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def load_checkpoint(path: str | Path) -> tuple[MlpParams, dict]:
    path = Path(path)
    try:
        record = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read checkpoint {path}: {exc}") from exc
    if record.get("format") != CHECKPOINT_FORMAT or record.get("version") != CHECKPOINT_VERSION:
        raise InvalidInputError(f"{path} is not a version-{CHECKPOINT_VERSION} checkpoint")
    tensors = {n: _tensor_from(record["tensors"][n]) for n in PARAM_NAMES}
    velocity = {n: _tensor_from(record["velocity"][n]) for n in PARAM_NAMES}
    params = MlpParams(**tensors, velocity=velocity, seed=record["seed"], step=record["step"])
    dims = record["dims"]
    if (params.input_dim, params.hidden_dim, params.num_classes) != (
        dims["input_dim"], dims["hidden_dim"], dims["num_classes"]
    ):
        raise InvalidInputError(f"{path}: tensor shapes disagree with recorded dims")
    return params, record.get("meta", {})


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
