"""Binary expansion of real pixel values and the least-squares QUBO.

Pixel j is represented by q_max bits as
    x_j = 2^{-k_j} * sum_q 2^q sigma_{q,j} + d_j
with bit (j, q) stored at index j * q_max + q. Because x is affine in the
bits, sum_i ((A x)_i - y_i)^2 is exactly quadratic and is assembled here in
closed form.
"""
from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.sparse as sp

from app.errors import DimensionMismatchError
from app.imaging.image import Image
from app.imaging.projector import Sinogram, SystemMatrix
from app.qubo.model import QuboProblem, as_bits


@dataclass(frozen=True, eq=False)
class EncodingState:
    d: np.ndarray
    k: np.ndarray
    q_max: int = 2
    c: Union[float, np.ndarray] = 0.5

    def __post_init__(self):
        d = np.array(self.d, dtype=np.float64).ravel()
        k = np.array(self.k, dtype=np.float64).ravel()
        if d.size != k.size:
            raise DimensionMismatchError(f"Offsets ({d.size}) and exponents ({k.size}) differ in length")
        if self.q_max < 1:
            raise ValueError(f"q_max must be >= 1, got {self.q_max}")
        if np.any(np.asarray(self.c) <= 0):
            raise ValueError("The exponent step c must be > 0")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "k", k)

    @classmethod
    def initial(cls, n_pixels: int, d0: float = 0.0, k0: float = 1.0,
                q_max: int = 2, c: Union[float, np.ndarray] = 0.5) -> "EncodingState":
        return cls(np.full(n_pixels, d0), np.full(n_pixels, k0), q_max, c)

    @property
    def n_pixels(self) -> int:
        return self.d.size

    @property
    def n_vars(self) -> int:
        return self.n_pixels * self.q_max

    def weights(self) -> np.ndarray:
        """(n_pixels, q_max) array of 2^{-k_j} 2^q."""
        return np.exp2(-self.k)[:, None] * np.exp2(np.arange(self.q_max))[None, :]

    def window_width(self) -> np.ndarray:
        """Width of the representable interval [d, d + (2^q_max - 1) 2^{-k}] per pixel."""
        return (2.0 ** self.q_max - 1.0) * np.exp2(-self.k)

    def refine(self, x: np.ndarray) -> "EncodingState":
        """k <- k + c, then d <- x - 2^(q_max - k - 1) using the updated k."""
        k = self.k + self.c
        d = np.asarray(x, dtype=np.float64).ravel() - np.exp2(self.q_max - k - 1.0)
        return EncodingState(d, k, self.q_max, self.c)


def decode_values(bits, enc: EncodingState) -> np.ndarray:
    s = as_bits(bits, enc.n_vars).reshape(enc.n_pixels, enc.q_max)
    return (enc.weights() * s).sum(axis=1) + enc.d


def decode(bits, enc: EncodingState) -> Image:
    n = int(round(np.sqrt(enc.n_pixels)))
    if n * n != enc.n_pixels:
        raise DimensionMismatchError(f"{enc.n_pixels} pixels do not form a square image")
    return Image.from_flat(decode_values(bits, enc), n)


def assemble_qubo(A: SystemMatrix, y: Sinogram, enc: EncodingState) -> QuboProblem:
    if A.n_rows != len(y):
        raise DimensionMismatchError(f"System matrix has {A.n_rows} rows, sinogram has {len(y)} values")
    if A.n_cols != enc.n_pixels:
        raise DimensionMismatchError(f"System matrix has {A.n_cols} columns, encoding has {enc.n_pixels} pixels")

    n_vars = enc.n_vars
    expand = sp.csr_matrix(
        (enc.weights().ravel(), (np.repeat(np.arange(enc.n_pixels), enc.q_max), np.arange(n_vars))),
        shape=(enc.n_pixels, n_vars),
    )
    B = (A.matrix @ expand).tocsc()
    residual = y.values - A.matrix @ enc.d
    gram = (B.T @ B).tocsr()

    linear = gram.diagonal() - 2.0 * (B.T @ residual)
    quadratic = 2.0 * sp.triu(gram, k=1, format="csr")
    return QuboProblem(linear, quadratic, float(residual @ residual))
