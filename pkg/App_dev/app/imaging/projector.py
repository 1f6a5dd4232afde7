"""Fan-beam geometry, Siddon ray tracing and the sparse system matrix.

Conventions: the object is the square [-side/2, side/2]^2 centered on the
isocenter, pixel j = row * n + col with row 0 at the top (largest y). At
gantry angle 0 the source sits on the +y axis; angles grow
counterclockwise. The flat detector is perpendicular to the
source-isocenter axis and centered on it. Ray i = angle * n_det + element
runs from the point source to the element center.
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp
from loguru import logger

from app.errors import DimensionMismatchError, DecodeError, InvalidSizeError
from app.imaging.image import IMAGE_SIDE_CM, Image
from app.utils.fs import ensure_parent

SDD_CM = 107.2
IDD_CM = 47.2
DET_PITCH_FRACTION = 0.8
MIN_LENGTH_CM = 1e-12

_TRIPLE = np.dtype([("row", "<u8"), ("col", "<u8"), ("length", "<f8")])


@dataclass(frozen=True)
class Geometry:
    sdd_cm: float
    idd_cm: float
    n_det: int
    det_spacing_cm: float
    angles_deg: Tuple[float, ...]
    image_side_cm: float
    n: int

    def __post_init__(self):
        if not self.sdd_cm > self.idd_cm > 0:
            raise ValueError(f"Need sdd > idd > 0, got sdd={self.sdd_cm}, idd={self.idd_cm}")
        if self.n < 2 or self.n_det != 2 * self.n:
            raise InvalidSizeError(f"Need n >= 2 and n_det = 2n, got n={self.n}, n_det={self.n_det}")
        angles = np.asarray(self.angles_deg, dtype=float)
        if angles.size < 1 or np.any(angles < 0) or np.any(angles >= 360) or np.unique(angles).size != angles.size:
            raise ValueError("Gantry angles must be distinct values in [0, 360)")

    @property
    def n_angles(self) -> int:
        return len(self.angles_deg)

    @property
    def n_rays(self) -> int:
        return self.n_angles * self.n_det

    @property
    def source_radius_cm(self) -> float:
        return self.sdd_cm - self.idd_cm

    @property
    def angles_rad(self) -> np.ndarray:
        return np.radians(np.asarray(self.angles_deg, dtype=float))

    def element_offsets_cm(self) -> np.ndarray:
        """Signed element-center positions along the detector axis."""
        return (np.arange(self.n_det) - (self.n_det - 1) / 2.0) * self.det_spacing_cm

    def ray_endpoints(self) -> Tuple[np.ndarray, np.ndarray]:
        """Source positions (n_angles, 2) and element centers (n_angles, n_det, 2)."""
        th = self.angles_rad
        toward_source = np.stack([-np.sin(th), np.cos(th)], axis=1)
        along_det = np.stack([np.cos(th), np.sin(th)], axis=1)
        src = self.source_radius_cm * toward_source
        center = -self.idd_cm * toward_source
        offsets = self.element_offsets_cm()
        dst = center[:, None, :] + offsets[None, :, None] * along_det[:, None, :]
        return src, dst


def make_geometry(n: int, n_angles: int) -> Geometry:
    """Reference geometry: 2n elements at 80 % pixel pitch, angles equally spaced over 360 degrees."""
    if n < 2:
        raise InvalidSizeError(f"Image size must be >= 2, got {n}")
    if n_angles < 1:
        raise ValueError(f"Need at least one gantry angle, got {n_angles}")
    step = 360.0 / n_angles
    return Geometry(
        sdd_cm=SDD_CM,
        idd_cm=IDD_CM,
        n_det=2 * n,
        det_spacing_cm=DET_PITCH_FRACTION * IMAGE_SIDE_CM / n,
        angles_deg=tuple(a * step for a in range(n_angles)),
        image_side_cm=IMAGE_SIDE_CM,
        n=n,
    )


def trace_ray(src: np.ndarray, dst: np.ndarray, n: int,
              side_cm: float = IMAGE_SIDE_CM) -> Tuple[np.ndarray, np.ndarray]:
    """Siddon traversal of the segment src -> dst through an n x n grid.

    Returns (pixel indices, intersection lengths in cm); empty when the ray
    misses the square.
    """
    src = np.asarray(src, dtype=float)
    d = np.asarray(dst, dtype=float) - src
    seg_len = float(np.hypot(d[0], d[1]))
    half = side_cm / 2.0
    empty = (np.empty(0, dtype=np.int64), np.empty(0))

    lo, hi = 0.0, 1.0
    for axis in (0, 1):
        if abs(d[axis]) < 1e-15:
            if not -half <= src[axis] <= half:
                return empty
            continue
        a1 = (-half - src[axis]) / d[axis]
        a2 = (half - src[axis]) / d[axis]
        lo, hi = max(lo, min(a1, a2)), min(hi, max(a1, a2))
    if hi <= lo:
        return empty

    planes = -half + (side_cm / n) * np.arange(n + 1)
    alphas = [np.array([lo, hi])]
    for axis in (0, 1):
        if abs(d[axis]) >= 1e-15:
            a = (planes - src[axis]) / d[axis]
            alphas.append(a[(a > lo) & (a < hi)])
    alphas = np.unique(np.concatenate(alphas))

    mids = 0.5 * (alphas[1:] + alphas[:-1])
    lengths = np.diff(alphas) * seg_len
    x = src[0] + mids * d[0]
    y = src[1] + mids * d[1]
    pitch = side_cm / n
    col = np.clip(np.floor((x + half) / pitch).astype(np.int64), 0, n - 1)
    row = np.clip(np.floor((half - y) / pitch).astype(np.int64), 0, n - 1)
    keep = lengths > MIN_LENGTH_CM
    return row[keep] * n + col[keep], lengths[keep]


@dataclass(frozen=True, eq=False)
class SystemMatrix:
    """Sparse m x n^2 matrix of ray-pixel pass lengths (cm)."""

    matrix: sp.csr_matrix
    geometry: Optional[Geometry] = None

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_cols(self) -> int:
        return self.matrix.shape[1]

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = ensure_parent(path)
        coo = self.matrix.tocoo()
        table = np.column_stack([coo.row, coo.col, coo.data])
        np.savetxt(path, table, delimiter=",", fmt=["%d", "%d", "%.17g"], header="row,col,length", comments="")
        return path

    def save_binary(self, path: Union[str, Path]) -> Path:
        """Little-endian: u64 m, u64 n^2, then (u64 row, u64 col, f64 length) triples."""
        path = ensure_parent(path)
        coo = self.matrix.tocoo()
        triples = np.empty(coo.nnz, dtype=_TRIPLE)
        triples["row"], triples["col"], triples["length"] = coo.row, coo.col, coo.data
        with open(path, "wb") as fh:
            fh.write(np.array(self.matrix.shape, dtype="<u8").tobytes())
            fh.write(triples.tobytes())
        return path

    @classmethod
    def load_binary(cls, path: Union[str, Path], geometry: Optional[Geometry] = None) -> "SystemMatrix":
        blob = Path(path).read_bytes()
        if len(blob) < 16 or (len(blob) - 16) % _TRIPLE.itemsize:
            raise DecodeError(f"Not a system-matrix file: {path}")
        m, cols = (int(v) for v in np.frombuffer(blob[:16], dtype="<u8"))
        triples = np.frombuffer(blob[16:], dtype=_TRIPLE)
        mat = sp.csr_matrix(
            (triples["length"], (triples["row"].astype(np.int64), triples["col"].astype(np.int64))),
            shape=(m, cols),
        )
        return cls(mat, geometry)


def build_system_matrix(geom: Geometry) -> SystemMatrix:
    src, dst = geom.ray_endpoints()
    rows, cols, vals = [], [], []
    for a in range(geom.n_angles):
        for t in range(geom.n_det):
            pix, lengths = trace_ray(src[a], dst[a, t], geom.n, geom.image_side_cm)
            rows.append(np.full(pix.size, a * geom.n_det + t, dtype=np.int64))
            cols.append(pix)
            vals.append(lengths)
    mat = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(geom.n_rays, geom.n * geom.n),
    )
    mat.sum_duplicates()
    mat.sort_indices()
    logger.debug("System matrix {}x{} with {} entries", mat.shape[0], mat.shape[1], mat.nnz)
    return SystemMatrix(mat, geom)


@dataclass(frozen=True, eq=False)
class Sinogram:
    """Flat vector of line integrals, ordered angle-major like the system-matrix rows."""

    values: np.ndarray
    geometry: Optional[Geometry] = None

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64).ravel()
        if not np.all(np.isfinite(vals)):
            raise ValueError("Sinogram values must be finite")
        if self.geometry is not None and vals.size != self.geometry.n_rays:
            raise DimensionMismatchError(f"{vals.size} values for {self.geometry.n_rays} rays")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.values.size

    def as_table(self) -> np.ndarray:
        if self.geometry is None:
            return self.values[None, :]
        return self.values.reshape(self.geometry.n_angles, self.geometry.n_det)

    def to_csv(self, path: Union[str, Path]) -> Path:
        """One line per gantry angle, n_det values per line."""
        path = ensure_parent(path)
        np.savetxt(path, self.as_table(), delimiter=",", fmt="%.17g")
        return path

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "Sinogram":
        try:
            table = np.loadtxt(path, delimiter=",", ndmin=2)
        except (OSError, ValueError) as e:
            raise DecodeError(f"Could not read sinogram CSV {path}: {e}") from e
        n_angles, n_det = table.shape
        if n_det % 2:
            raise DecodeError(f"Sinogram {path} has an odd detector count {n_det}")
        return cls(table.ravel(), make_geometry(n_det // 2, n_angles))


def forward_project(A: SystemMatrix, x: Image) -> Sinogram:
    if A.n_cols != x.n * x.n:
        raise DimensionMismatchError(f"System matrix has {A.n_cols} columns, image has {x.n * x.n} pixels")
    return Sinogram(A.matrix @ x.flat(), A.geometry)


def back_project(A: SystemMatrix, y: Sinogram) -> Image:
    if A.n_rows != len(y):
        raise DimensionMismatchError(f"System matrix has {A.n_rows} rows, sinogram has {len(y)} values")
    n = int(round(np.sqrt(A.n_cols)))
    return Image.from_flat(A.matrix.T @ y.values, n)
