import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from app.errors import DimensionMismatchError, DecodeError, InvalidSizeError
from app.utils.fs import ensure_parent
from app.utils.image import full_scale, read_raster, write_pgm16

# All objects are a 25.6 cm square.
IMAGE_SIDE_CM = 25.6


@dataclass(frozen=True, eq=False)
class Image:
    """n x n grid of line-attenuation coefficients (1/cm), row 0 at the top."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.shape[0] != px.shape[1] or px.shape[0] < 1:
            raise InvalidSizeError(f"Image must be a non-empty square grid, got shape {px.shape}")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def n(self) -> int:
        return self.pixels.shape[0]

    @property
    def pixel_scale_cm(self) -> float:
        return IMAGE_SIDE_CM / self.n

    def flat(self) -> np.ndarray:
        return self.pixels.ravel()

    @classmethod
    def from_flat(cls, values: np.ndarray, n: int) -> "Image":
        values = np.asarray(values, dtype=np.float64)
        if values.size != n * n:
            raise DimensionMismatchError(f"{values.size} values cannot fill a {n}x{n} image")
        return cls(values.reshape(n, n))

    # ---- CSV: one image row per line, full float precision ----

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = ensure_parent(path)
        np.savetxt(path, self.pixels, delimiter=",", fmt="%.17g")
        return path

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "Image":
        try:
            values = np.loadtxt(path, delimiter=",", ndmin=2)
        except (OSError, ValueError) as e:
            raise DecodeError(f"Could not read image CSV {path}: {e}") from e
        return cls(values)

    # ---- 16-bit PGM plus {min, max} sidecar ----

    def save_pgm(self, path: Union[str, Path], lo: Optional[float] = None, hi: Optional[float] = None) -> Path:
        """Scale [lo, hi] onto 0..65535; defaults widen [0, 1] to cover the data."""
        lo = min(0.0, float(self.pixels.min())) if lo is None else lo
        hi = max(1.0, float(self.pixels.max())) if hi is None else hi
        path = write_pgm16(path, (self.pixels - lo) / (hi - lo))
        sidecar(path).write_text(json.dumps({"min": lo, "max": hi}))
        return path

    @classmethod
    def load_pgm(cls, path: Union[str, Path]) -> "Image":
        raw = read_raster(path)
        lo, hi = 0.0, 1.0
        meta = sidecar(path)
        if meta.exists():
            scale = json.loads(meta.read_text())
            lo, hi = float(scale["min"]), float(scale["max"])
        return cls(lo + raw / full_scale(raw) * (hi - lo))


def sidecar(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")
