"""QUBO problems over 0/1 variables and their text format.

energy(sigma) = offset + sum_i linear_i sigma_i + sum_{i<j} quadratic_ij sigma_i sigma_j
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Mapping, Tuple, Union

import numpy as np
import scipy.sparse as sp

from app.errors import DecodeError, DimensionMismatchError
from app.utils.fs import ensure_parent

# Coefficients smaller than this are numerical dust from cancellation.
DROP_BELOW = 1e-15


def var_index(j: int, q: int, q_max: int) -> int:
    """Position of bit q of pixel j in a BitAssignment."""
    return j * q_max + q


def as_bits(bits, n_vars: int) -> np.ndarray:
    arr = np.asarray(bits)
    if arr.ndim != 1 or arr.size != n_vars:
        raise DimensionMismatchError(f"Expected {n_vars} bits, got shape {arr.shape}")
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("Bit assignments may only contain 0 and 1")
    return arr.astype(np.uint8)


@dataclass(frozen=True, eq=False)
class QuboProblem:
    linear: np.ndarray
    quadratic: sp.csr_matrix
    offset: float = 0.0

    def __post_init__(self):
        lin = np.array(self.linear, dtype=np.float64).ravel()
        quad = sp.csr_matrix(self.quadratic, dtype=np.float64, copy=True)
        if quad.shape != (lin.size, lin.size):
            raise DimensionMismatchError(f"Couplings {quad.shape} do not match {lin.size} variables")
        coo = quad.tocoo()
        if np.any(coo.row >= coo.col):
            raise ValueError("Couplings must be strictly upper triangular (i < j)")
        quad.data[np.abs(quad.data) < DROP_BELOW] = 0.0
        quad.eliminate_zeros()
        quad.sort_indices()
        lin[np.abs(lin) < DROP_BELOW] = 0.0
        lin.setflags(write=False)
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "quadratic", quad)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def n_vars(self) -> int:
        return self.linear.size

    @classmethod
    def from_terms(cls, linear, couplings: Mapping[Tuple[int, int], float], offset: float = 0.0) -> "QuboProblem":
        lin = np.asarray(linear, dtype=np.float64)
        n = lin.size
        rows, cols, vals = [], [], []
        for (i, j), v in couplings.items():
            if i == j:
                raise ValueError(f"Self-coupling ({i}, {i}) belongs in the linear terms")
            rows.append(min(i, j))
            cols.append(max(i, j))
            vals.append(v)
        quad = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        return cls(lin, quad, offset)

    def couplings(self) -> Dict[Tuple[int, int], float]:
        coo = self.quadratic.tocoo()
        return {(int(i), int(j)): float(v) for i, j, v in zip(coo.row, coo.col, coo.data)}

    def symmetric(self) -> sp.csr_matrix:
        """Couplings mirrored into both triangles, as the sampling kernels want them."""
        sym = (self.quadratic + self.quadratic.T).tocsr()
        sym.sort_indices()
        return sym

    def max_abs_coefficient(self) -> float:
        peaks = [np.abs(self.linear).max(initial=0.0), np.abs(self.quadratic.data).max(initial=0.0)]
        return float(max(peaks))

    def energy(self, bits) -> float:
        return energy(self, bits)

    # ---- text format ----

    def dump(self, path: Union[str, Path]) -> Path:
        path = ensure_parent(path)
        with open(path, "w") as fh:
            fh.write(f"VARS {self.n_vars} OFFSET {self.offset!r}\n")
            for i in np.flatnonzero(self.linear):
                fh.write(f"L {i} {float(self.linear[i])!r}\n")
            for (i, j), v in self.couplings().items():
                fh.write(f"Q {i} {j} {v!r}\n")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "QuboProblem":
        try:
            lines = Path(path).read_text().split("\n")
            head = lines[0].split()
            if len(head) != 4 or head[0] != "VARS" or head[2] != "OFFSET":
                raise ValueError(f"bad header {lines[0]!r}")
            n, offset = int(head[1]), float(head[3])
            linear = np.zeros(n)
            couplings = {}
            for line in lines[1:]:
                parts = line.split()
                if not parts:
                    continue
                if parts[0] == "L" and len(parts) == 3:
                    linear[int(parts[1])] += float(parts[2])
                elif parts[0] == "Q" and len(parts) == 4:
                    key = (int(parts[1]), int(parts[2]))
                    couplings[key] = couplings.get(key, 0.0) + float(parts[3])
                else:
                    raise ValueError(f"bad line {line!r}")
        except (OSError, ValueError, IndexError) as e:
            raise DecodeError(f"Could not read QUBO file {path}: {e}") from e
        return cls.from_terms(linear, couplings, offset)


def energy(q: QuboProblem, bits) -> float:
    s = as_bits(bits, q.n_vars).astype(np.float64)
    return float(q.offset + q.linear @ s + s @ (q.quadratic @ s))
