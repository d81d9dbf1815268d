"""High-frequency logit distillation with a single-level 2D Haar transform."""

from hfdistill.errors import (
    ContractViolationError,
    InvalidInputError,
    TrainingDivergedError,
)
from hfdistill.geometry import GridFactorization, factorize_grid, flatten_grid, reshape_logits
from hfdistill.losses import (
    LossValue,
    LossWeights,
    ablation_band_loss,
    ce_loss,
    detail_loss,
    figkd_loss,
    kd_loss,
    softmax_t,
)
from hfdistill.wavelet import (
    LogitGrid,
    WaveletBands,
    dwt2_haar,
    idwt2_haar,
    reconstruct_from_bands,
)

__version__ = "0.1.0"

__all__ = [
    "ContractViolationError",
    "GridFactorization",
    "InvalidInputError",
    "LogitGrid",
    "LossValue",
    "LossWeights",
    "TrainingDivergedError",
    "WaveletBands",
    "ablation_band_loss",
    "ce_loss",
    "detail_loss",
    "dwt2_haar",
    "factorize_grid",
    "figkd_loss",
    "flatten_grid",
    "idwt2_haar",
    "kd_loss",
    "reconstruct_from_bands",
    "reshape_logits",
    "softmax_t",
]
