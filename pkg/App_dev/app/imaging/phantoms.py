"""Ground-truth test objects.

Every generator is deterministic and returns an :class:`Image` with pixel
values in [0, 1].
"""
from pathlib import Path
from typing import Union

import cv2
import numpy as np
from loguru import logger

from app.errors import InvalidSizeError
from app.imaging.image import IMAGE_SIDE_CM, Image
from app.utils.image import read_grayscale

# Modified (Toft) Shepp-Logan table on [-1, 1]^2, y pointing up:
# (value, semi-axis a, semi-axis b, x0, y0, rotation in degrees)
SHEPP_LOGAN_ELLIPSES = (
    (1.0, 0.6900, 0.9200, 0.00, 0.0000, 0.0),
    (-0.8, 0.6624, 0.8740, 0.00, -0.0184, 0.0),
    (-0.2, 0.1100, 0.3100, 0.22, 0.0000, -18.0),
    (-0.2, 0.1600, 0.4100, -0.22, 0.0000, 18.0),
    (0.1, 0.2100, 0.2500, 0.00, 0.3500, 0.0),
    (0.1, 0.0460, 0.0460, 0.00, 0.1000, 0.0),
    (0.1, 0.0460, 0.0460, 0.00, -0.1000, 0.0),
    (0.1, 0.0460, 0.0230, -0.08, -0.6050, 0.0),
    (0.1, 0.0230, 0.0230, 0.00, -0.6060, 0.0),
    (0.1, 0.0230, 0.0460, 0.06, -0.6050, 0.0),
)

BLOCK_VALUES = ((0.3, 0.4), (0.8, 0.2))


def _check_size(n: int, minimum: int = 2) -> None:
    if not isinstance(n, (int, np.integer)) or n < minimum:
        raise InvalidSizeError(f"Image size must be an integer >= {minimum}, got {n!r}")


def pixel_centers(n: int):
    """Normalized pixel-center coordinates (X, Y) on [-1, 1]^2, row 0 at the top."""
    coords = (2.0 * np.arange(n) + 1.0) / n - 1.0
    X, Y = np.meshgrid(coords, -coords)
    return X, Y


def make_block_phantom() -> Image:
    """4x4 object with the central 2x2 block set row-major to 0.3, 0.4 / 0.8, 0.2."""
    px = np.zeros((4, 4))
    px[1:3, 1:3] = BLOCK_VALUES
    return Image(px)


def make_shepp_logan(n: int) -> Image:
    _check_size(n)
    X, Y = pixel_centers(n)
    px = np.zeros((n, n))
    for value, a, b, x0, y0, phi in SHEPP_LOGAN_ELLIPSES:
        t = np.radians(phi)
        dx, dy = X - x0, Y - y0
        u = dx * np.cos(t) + dy * np.sin(t)
        v = -dx * np.sin(t) + dy * np.cos(t)
        px[(u / a) ** 2 + (v / b) ** 2 <= 1.0] += value
    return Image(np.clip(px, 0.0, 1.0))


def make_disk_phantom(n: int, radius_cm: float = 8.0, value: float = 0.5) -> Image:
    """Centered disk sampled at pixel centers."""
    _check_size(n)
    X, Y = pixel_centers(n)
    r = np.hypot(X, Y) * IMAGE_SIDE_CM / 2.0
    return Image(np.where(r <= radius_cm, value, 0.0))


def make_ct_phantom(source: Union[str, Path], n: int) -> Image:
    """Block-mean downsample of a grayscale slice to n x n, normalized to [0, 1]."""
    _check_size(n, minimum=1)
    raw = read_grayscale(source)
    h, w = raw.shape
    if h < n or w < n:
        raise InvalidSizeError(f"Source {source} is {h}x{w}, smaller than {n}x{n}")
    small = cv2.resize(raw, (n, n), interpolation=cv2.INTER_AREA)
    lo, hi = float(small.min()), float(small.max())
    if hi - lo <= 1e-12 * max(1.0, abs(hi)):
        logger.warning("CT source {} is flat after downsampling; returning a zero image", source)
        return Image(np.zeros((n, n)))
    return Image((small - lo) / (hi - lo))


PHANTOM_KINDS = ("block", "shepp_logan", "ct", "disk")


def make_phantom(kind: str, n: int, source: Union[str, Path, None] = None) -> Image:
    if kind == "block":
        if n != 4:
            raise InvalidSizeError("The block phantom is only defined at n = 4")
        return make_block_phantom()
    if kind == "shepp_logan":
        return make_shepp_logan(n)
    if kind == "disk":
        return make_disk_phantom(n)
    if kind == "ct":
        if not source:
            raise ValueError("The ct phantom needs a grayscale source image (CT_SOURCE)")
        return make_ct_phantom(source, n)
    raise ValueError(f"Unknown phantom kind {kind!r}; expected one of {PHANTOM_KINDS}")
