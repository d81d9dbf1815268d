"""Choosing the H x W layout for a C-class logit vector, and moving between the two."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from hfdistill.errors import InvalidInputError
from hfdistill.wavelet import LogitGrid


@dataclass(frozen=True)
class GridFactorization:
    num_classes: int
    height: int
    width: int

    def __post_init__(self):
        if self.height < 1 or self.width < 1 or self.height * self.width != self.num_classes:
            raise InvalidInputError(
                f"{self.height}x{self.width} is not a factorization of {self.num_classes}"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width


def factorize_grid(num_classes: int) -> GridFactorization:
    """Return the most square exact factorization ``H * W = C`` with ``H <= W``.

    ``H`` is the largest divisor of ``C`` not exceeding ``sqrt(C)``; a prime
    class count therefore lays out as a single row.

    >>> factorize_grid(200)
    GridFactorization(num_classes=200, height=10, width=20)
    """
    if isinstance(num_classes, bool) or int(num_classes) != num_classes or num_classes < 1:
        raise InvalidInputError(f"num_classes must be a positive integer, got {num_classes!r}")
    c = int(num_classes)
    for h in range(math.isqrt(c), 0, -1):
        if c % h == 0:
            return GridFactorization(c, h, c // h)
    raise AssertionError("unreachable: 1 divides every integer")


def reshape_logits(logits, fact: GridFactorization) -> LogitGrid:
    """Row-major fill of the last axis into ``fact.shape``; leading axes are kept."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim == 0 or logits.shape[-1] != fact.num_classes:
        raise InvalidInputError(
            f"expected {fact.num_classes} logits, got shape {logits.shape}"
        )
    return LogitGrid(logits.reshape(logits.shape[:-1] + fact.shape), original_len=fact.num_classes)


def flatten_grid(grid: LogitGrid) -> np.ndarray:
    values = grid.values
    return values.reshape(values.shape[:-2] + (grid.original_len,))
