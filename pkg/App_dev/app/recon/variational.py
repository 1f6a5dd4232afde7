"""Variational real-number reconstruction through repeated QUBO solves.

Every iteration assembles the least-squares QUBO for the current encoding,
samples it, decodes the best assignment and then narrows the encoding:
k <- k + c followed by d <- x - 2^(q_max - k - 1) with the updated k. The
previous estimate therefore always stays representable while the window
shrinks by 2^-c per iteration.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger

from app.errors import DimensionMismatchError, WindowContainmentError
from app.experiments.metrics import rmse
from app.imaging.image import Image
from app.imaging.projector import Sinogram, SystemMatrix
from app.qubo.encoding import EncodingState, assemble_qubo, decode
from app.solvers.annealer import AnnealSchedule, SimulatedAnnealingSampler, derive_seed
from app.solvers.base import QuboSampler
from app.utils.fs import ensure_parent


@dataclass(frozen=True)
class QactConfig:
    q_max: int = 2
    c: Union[float, Tuple[float, ...]] = 0.5
    k0: float = 1.0
    n_iters: int = 30
    sampler: AnnealSchedule = field(default_factory=AnnealSchedule)
    d0: float = 0.0
    early_stop_width: Optional[float] = None  # off unless set

    def __post_init__(self):
        if self.n_iters < 1:
            raise ValueError(f"n_iters must be >= 1, got {self.n_iters}")
        if self.q_max < 1:
            raise ValueError(f"q_max must be >= 1, got {self.q_max}")
        if np.any(np.asarray(self.c, dtype=float) <= 0):
            raise ValueError("c must be > 0")


@dataclass(frozen=True, eq=False)
class TraceRecord:
    iteration: int
    image: Optional[Image]
    energy: float
    rmse: Optional[float]
    window_width: float


@dataclass
class QactTrace:
    records: List[TraceRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TraceRecord]:
        return iter(self.records)

    def __getitem__(self, i: int) -> TraceRecord:
        return self.records[i]

    def append(self, record: TraceRecord) -> None:
        self.records.append(record)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "iteration": [r.iteration for r in self.records],
            "energy": [r.energy for r in self.records],
            "rmse": [np.nan if r.rmse is None else r.rmse for r in self.records],
        })

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = ensure_parent(path)
        self.to_frame().to_csv(path, index=False, float_format="%.17g")
        return path

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "QactTrace":
        frame = pd.read_csv(path, float_precision="round_trip")
        records = [
            TraceRecord(int(row.iteration), None, float(row.energy),
                        None if pd.isna(row.rmse) else float(row.rmse), np.nan)
            for row in frame.itertuples(index=False)
        ]
        return cls(records)


def check_window(enc: EncodingState, x: np.ndarray) -> None:
    lo = enc.d
    hi = enc.d + enc.window_width()
    bad = (x < lo) | (x > hi)
    if np.any(bad):
        j = int(np.flatnonzero(bad)[0])
        raise WindowContainmentError(f"Pixel {j} value {x[j]!r} left the window [{lo[j]!r}, {hi[j]!r}]")


def reconstruct(A: SystemMatrix, y: Sinogram, cfg: QactConfig, gt: Optional[Image] = None,
                sampler: Optional[QuboSampler] = None) -> Tuple[Image, QactTrace]:
    if A.n_rows != len(y):
        raise DimensionMismatchError(f"System matrix has {A.n_rows} rows, sinogram has {len(y)} values")
    if gt is not None and gt.n * gt.n != A.n_cols:
        raise DimensionMismatchError(f"Ground truth has {gt.n * gt.n} pixels, system matrix {A.n_cols} columns")

    sampler = sampler or SimulatedAnnealingSampler(cfg.sampler)
    c = np.asarray(cfg.c, dtype=float) if np.ndim(cfg.c) else float(cfg.c)
    enc = EncodingState.initial(A.n_cols, cfg.d0, cfg.k0, cfg.q_max, c)
    trace = QactTrace()
    x = None

    for it in range(1, cfg.n_iters + 1):
        q = assemble_qubo(A, y, enc)
        result = sampler.sample(q, seed=derive_seed(cfg.sampler.seed, it))
        x = decode(result.best_bits, enc)
        err = rmse(x, gt) if gt is not None else None
        width = float(enc.window_width().max())
        trace.append(TraceRecord(it, x, result.best_energy, err, width))
        logger.debug("QACT iter {}: energy {:.6g} rmse {} window {:.3g}", it, result.best_energy, err, width)

        enc = enc.refine(x.flat())
        check_window(enc, x.flat())
        if cfg.early_stop_width is not None and enc.window_width().max() < cfg.early_stop_width:
            logger.info("QACT stopped after {} iterations: window below {}", it, cfg.early_stop_width)
            break

    return x, trace
