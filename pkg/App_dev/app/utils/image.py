# App_dev/app/utils/image.py
from pathlib import Path
from typing import Sequence, Union

import cv2
import numpy as np

from app.errors import DecodeError
from app.utils.fs import ensure_parent

PGM_MAX = 65535


def read_raster(path: Union[str, Path]) -> np.ndarray:
    """Decode an 8/16-bit grayscale (or colour, converted) raster, keeping its dtype."""
    if not Path(path).is_file():
        raise DecodeError(f"No such image: {path}")
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise DecodeError(f"Could not decode image: {path}")
    if raw.ndim == 3:
        code = cv2.COLOR_BGRA2GRAY if raw.shape[2] == 4 else cv2.COLOR_BGR2GRAY
        raw = cv2.cvtColor(raw, code)
    return raw


def read_grayscale(path: Union[str, Path]) -> np.ndarray:
    return read_raster(path).astype(np.float64)


def full_scale(raw: np.ndarray) -> float:
    return float(np.iinfo(raw.dtype).max) if np.issubdtype(raw.dtype, np.integer) else 1.0


def write_pgm16(path: Union[str, Path], unit: np.ndarray) -> Path:
    """Write values in [0, 1] as a binary (P5) 16-bit PGM."""
    path = ensure_parent(path)
    counts = np.rint(np.clip(unit, 0.0, 1.0) * PGM_MAX).astype(np.uint16)
    if not cv2.imwrite(str(path), counts, [cv2.IMWRITE_PXM_BINARY, 1]):
        raise OSError(f"Failed to write PGM: {path}")
    return path


def to_u8(values: np.ndarray, lo: float, hi: float) -> np.ndarray:
    span = hi - lo
    if span <= 0:
        return np.zeros(values.shape, dtype=np.uint8)
    unit = np.clip((values - lo) / span, 0.0, 1.0)
    return np.rint(unit * 255).astype(np.uint8)


def tile(values: np.ndarray, size: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """Nearest-neighbour upscale of a small image to a size x size uint8 tile."""
    return cv2.resize(to_u8(values, lo, hi), (size, size), interpolation=cv2.INTER_NEAREST)


def montage(rows: Sequence[Sequence[np.ndarray]], header: Sequence[str], size: int, pad: int = 4) -> np.ndarray:
    """Stack uint8 tiles into a labelled grid; every row must have len(header) tiles."""
    label_h = 22
    width = len(header) * (size + pad) + pad
    height = label_h + len(rows) * (size + pad) + pad
    canvas = np.full((height, width), 255, dtype=np.uint8)
    for c, text in enumerate(header):
        x0 = pad + c * (size + pad)
        cv2.putText(canvas, text, (x0 + 2, label_h - 6), cv2.FONT_HERSHEY_SIMPLEX, 0.5, 0, 1, cv2.LINE_AA)
    for r, row in enumerate(rows):
        y0 = label_h + pad + r * (size + pad)
        for c, t in enumerate(row):
            x0 = pad + c * (size + pad)
            canvas[y0:y0 + size, x0:x0 + size] = t
    return canvas


def write_png(path: Union[str, Path], canvas: np.ndarray) -> Path:
    path = ensure_parent(path)
    if not cv2.imwrite(str(path), canvas):
        raise OSError(f"Failed to write PNG: {path}")
    return path
