"""Transmission MLEM acting on intensities e^{-y}:

    x_j <- x_j * sum_i A_ij exp(-(A x)_i) / sum_i A_ij exp(-y_i)

Pixels crossed by no ray keep their initial value.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from loguru import logger

from app.errors import DimensionMismatchError
from app.experiments.metrics import projection_rmse
from app.imaging.image import Image
from app.imaging.projector import Sinogram, SystemMatrix


@dataclass(frozen=True)
class MlemConfig:
    max_iters: int = 400
    x_init: float = 0.1
    epsilon: float = 1e-12

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.x_init <= 0:
            raise ValueError(f"x_init must be > 0, got {self.x_init}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")


@dataclass(frozen=True, eq=False)
class MlemTrace:
    projection_rmse: np.ndarray  # per iteration, NaN without a reference projection
    selected_iter: int  # 1-based
    final: Image


def mlem_denominator(A: SystemMatrix, y: Sinogram, cfg: MlemConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Guarded sum_i A_ij e^{-y_i} and the mask of pixels touched by any ray."""
    touched = np.asarray(A.matrix.sum(axis=0)).ravel() > 0
    den = A.matrix.T @ np.exp(-y.values)
    small = touched & (den < cfg.epsilon)
    if np.any(small):
        logger.warning("MLEM denominator below {} on {} pixels; flooring", cfg.epsilon, int(small.sum()))
    return np.maximum(den, cfg.epsilon), touched


def mlem_update(A: SystemMatrix, x: np.ndarray, den: np.ndarray, touched: np.ndarray) -> np.ndarray:
    num = A.matrix.T @ np.exp(-(A.matrix @ x))
    return x * np.where(touched, num / den, 1.0)


def mlem_reconstruct(A: SystemMatrix, y: Sinogram, cfg: MlemConfig,
                     gt_projection: Optional[Sinogram] = None) -> Tuple[Image, MlemTrace]:
    """Run max_iters updates and return the iterate whose projection is closest
    to ``gt_projection`` (the final iterate when no reference is given)."""
    if A.n_rows != len(y):
        raise DimensionMismatchError(f"System matrix has {A.n_rows} rows, sinogram has {len(y)} values")
    if gt_projection is not None and len(gt_projection) != len(y):
        raise DimensionMismatchError("Reference projection and sinogram differ in length")

    n = int(round(np.sqrt(A.n_cols)))
    den, touched = mlem_denominator(A, y, cfg)
    x = np.full(A.n_cols, cfg.x_init)
    errors = np.full(cfg.max_iters, np.nan)
    best_x, best_iter, best_err = x, cfg.max_iters, np.inf

    for it in range(1, cfg.max_iters + 1):
        x = mlem_update(A, x, den, touched)
        if gt_projection is not None:
            errors[it - 1] = projection_rmse(A.matrix @ x, gt_projection.values)
            if errors[it - 1] < best_err:
                best_x, best_iter, best_err = x, it, errors[it - 1]

    final = Image.from_flat(x, n)
    if gt_projection is None:
        return final, MlemTrace(errors, cfg.max_iters, final)
    logger.debug("MLEM selected iteration {} (projection rmse {:.4g})", best_iter, best_err)
    return Image.from_flat(best_x, n), MlemTrace(errors, best_iter, final)
