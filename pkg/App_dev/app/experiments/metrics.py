import numpy as np

from app.errors import DimensionMismatchError
from app.imaging.image import Image


def rmse(a: Image, b: Image) -> float:
    if a.n != b.n:
        raise DimensionMismatchError(f"Cannot compare a {a.n}x{a.n} image with a {b.n}x{b.n} image")
    return float(np.sqrt(np.mean((a.pixels - b.pixels) ** 2)))


def projection_rmse(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise DimensionMismatchError(f"Projection shapes differ: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))
