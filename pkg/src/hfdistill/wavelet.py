"""Single-level orthonormal 2D Haar transform on small real grids.

Every 2x2 block ``[[a, b], [c, d]]`` (rows index height) maps to::

    LL = (a + b + c + d) / 2
    LH = (a - b + c - d) / 2    # horizontal difference
    HL = (a + b - c - d) / 2    # vertical difference
    HH = (a - b - c + d) / 2

The four block filters form an orthonormal basis, so the inverse is the
transpose and energy is conserved. Odd dimensions are padded by edge
replication before the transform and cropped after the inverse; replication
adds no detail energy along the padded axis.

Arrays may carry leading batch axes; the grid is always the last two axes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from hfdistill.errors import InvalidInputError

BAND_NAMES = ("ll", "lh", "hl", "hh")
DETAIL_BANDS = ("lh", "hl", "hh")


@dataclass(frozen=True)
class LogitGrid:
    """A logit vector laid out row-major on an ``H x W`` grid.

    ``pad_rows``/``pad_cols`` report the edge replication the transform
    applies (1 for an odd axis, else 0); ``values`` itself is never padded.
    """

    values: np.ndarray
    original_len: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim < 2:
            raise InvalidInputError(f"grid needs at least 2 dims, got shape {values.shape}")
        h, w = values.shape[-2:]
        if h < 1 or w < 1:
            raise InvalidInputError(f"grid dims must be >= 1, got {h}x{w}")
        if h * w != self.original_len:
            raise InvalidInputError(
                f"grid {h}x{w} does not hold original_len={self.original_len}"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("grid contains non-finite values")
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape[-2], self.values.shape[-1]

    @property
    def pad_rows(self) -> int:
        return self.shape[0] % 2

    @property
    def pad_cols(self) -> int:
        return self.shape[1] % 2


@dataclass(frozen=True)
class WaveletBands:
    """The LL, LH, HL, HH subbands of one (possibly batched) grid."""

    ll: np.ndarray
    lh: np.ndarray
    hl: np.ndarray
    hh: np.ndarray
    source_shape: tuple[int, int, int, int]  # (H, W, pad_rows, pad_cols)

    def __post_init__(self):
        shapes = {np.shape(getattr(self, name)) for name in BAND_NAMES}
        if len(shapes) != 1:
            raise InvalidInputError(f"band shapes disagree: {sorted(shapes)}")
        (shape,) = shapes
        if len(shape) < 2:
            raise InvalidInputError(f"bands must be at least 2-D, got shape {shape}")
        h, w, pr, pc = self.source_shape
        if pr not in (0, 1) or pc not in (0, 1):
            raise InvalidInputError(f"padding flags must be 0 or 1, got {pr}, {pc}")
        if (h + pr) % 2 or (w + pc) % 2:
            raise InvalidInputError(f"source shape {self.source_shape} is not even after padding")
        expected = ((h + pr) // 2, (w + pc) // 2)
        if tuple(shape[-2:]) != expected:
            raise InvalidInputError(
                f"band shape {shape[-2:]} inconsistent with source {self.source_shape}"
            )

    def as_dict(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in BAND_NAMES}

    def energy(self) -> np.ndarray:
        return sum(np.sum(b**2, axis=(-2, -1)) for b in self.as_dict().values())


def pad_even(x: np.ndarray) -> tuple[np.ndarray, int, int]:
    """Edge-replicate the last two axes up to even length."""
    h, w = x.shape[-2:]
    pr, pc = h % 2, w % 2
    if pr or pc:
        widths = [(0, 0)] * (x.ndim - 2) + [(0, pr), (0, pc)]
        x = np.pad(x, widths, mode="edge")
    return x, pr, pc


def fold_padding(g: np.ndarray, pad_rows: int, pad_cols: int) -> np.ndarray:
    """Adjoint of :func:`pad_even`: add replicated entries back onto the edge."""
    if pad_cols:
        out = g[..., :, :-1].copy()
        out[..., :, -1] += g[..., :, -1]
        g = out
    if pad_rows:
        out = g[..., :-1, :].copy()
        out[..., -1, :] += g[..., -1, :]
        g = out
    return g


def haar_forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Block formulas on an even-shaped array; returns (ll, lh, hl, hh)."""
    a = x[..., 0::2, 0::2]
    b = x[..., 0::2, 1::2]
    c = x[..., 1::2, 0::2]
    d = x[..., 1::2, 1::2]
    # pair differences first, so replicated padding yields exact zeros
    return (
        ((a + b) + (c + d)) / 2,
        ((a - b) + (c - d)) / 2,
        ((a - c) + (b - d)) / 2,
        ((a - c) - (b - d)) / 2,
    )


def haar_inverse(ll, lh, hl, hh) -> np.ndarray:
    """Transpose of :func:`haar_forward`; returns the even-shaped array."""
    lead = ll.shape[:-2]
    h2, w2 = ll.shape[-2:]
    out = np.empty(lead + (2 * h2, 2 * w2), dtype=np.result_type(ll, lh, hl, hh, np.float64))
    out[..., 0::2, 0::2] = (ll + lh + hl + hh) / 2
    out[..., 0::2, 1::2] = (ll - lh + hl - hh) / 2
    out[..., 1::2, 0::2] = (ll + lh - hl - hh) / 2
    out[..., 1::2, 1::2] = (ll - lh - hl + hh) / 2
    return out


def dwt2_haar(grid: LogitGrid) -> WaveletBands:
    values = grid.values
    if not np.all(np.isfinite(values)):
        raise InvalidInputError("grid contains non-finite values")
    padded, pr, pc = pad_even(values)
    ll, lh, hl, hh = haar_forward(padded)
    h, w = grid.shape
    return WaveletBands(ll, lh, hl, hh, source_shape=(h, w, pr, pc))


def idwt2_haar(bands: WaveletBands) -> LogitGrid:
    """Invert :func:`dwt2_haar`, cropping the replicated edge."""
    h, w, _, _ = bands.source_shape
    full = haar_inverse(bands.ll, bands.lh, bands.hl, bands.hh)
    return LogitGrid(full[..., :h, :w], original_len=h * w)


def reconstruct_from_bands(bands: WaveletBands, keep_ll: bool, keep_hf: bool) -> LogitGrid:
    """Zero the unselected bands, then invert.

    ``keep_ll`` alone gives the per-block mean field; ``keep_hf`` alone gives
    the residual around it. With both off the result is the zero grid.
    """
    zero = np.zeros_like(bands.ll)
    kept = WaveletBands(
        ll=bands.ll if keep_ll else zero,
        lh=bands.lh if keep_hf else zero,
        hl=bands.hl if keep_hf else zero,
        hh=bands.hh if keep_hf else zero,
        source_shape=bands.source_shape,
    )
    return idwt2_haar(kept)


def dump_bands_csv(bands: WaveletBands, directory: str | Path, prefix: str = "") -> list[Path]:
    """Write each 2-D band to ``<prefix><band>.csv`` (row-major, no header)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, band in bands.as_dict().items():
        band = np.asarray(band)
        if band.ndim != 2:
            raise InvalidInputError(f"can only dump 2-D bands, got shape {band.shape}")
        path = directory / f"{prefix}{name}.csv"
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            for row in band:
                writer.writerow([f"{v:.9g}" for v in row])
        written.append(path)
    return written
