"""Experiment grids: which phantoms, sizes, angle counts, noise levels,
methods and seeds to run, loadable from a dotenv-style KEY=value file."""
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Optional, Tuple, Union

from dotenv import dotenv_values
from loguru import logger

from app.imaging.phantoms import PHANTOM_KINDS
from app.recon.mlem import MlemConfig
from app.recon.variational import QactConfig

METHODS = ("qact", "mlem", "fbp")
GRID_SIZES = (4, 8, 16, 24)
GRID_ANGLES = (3, 9, 18, 36)
GRID_I0 = (None, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6)


def i0_label(i0: Optional[float]) -> str:
    return "inf" if i0 is None else f"{i0:g}"


@dataclass(frozen=True)
class GridPoint:
    phantom: str
    n: int
    n_angles: int
    i0: Optional[float]  # None = noiseless
    seed: int

    @property
    def stem(self) -> str:
        return f"{self.phantom}_n{self.n}_a{self.n_angles}_i0{i0_label(self.i0)}_s{self.seed}"


@dataclass(frozen=True)
class ExperimentSpec:
    phantom: str = "shepp_logan"
    sizes: Tuple[int, ...] = (16,)
    angles: Tuple[int, ...] = (36,)
    i0: Tuple[Optional[float], ...] = (None,)
    methods: Tuple[str, ...] = METHODS
    seeds: Tuple[int, ...] = (0, 1, 2)
    ct_source: Optional[str] = None
    qact: QactConfig = field(default_factory=QactConfig)
    mlem: MlemConfig = field(default_factory=MlemConfig)

    def __post_init__(self):
        if self.phantom not in PHANTOM_KINDS:
            raise ValueError(f"Unknown phantom kind {self.phantom!r}; expected one of {PHANTOM_KINDS}")
        unknown = set(self.methods) - set(METHODS)
        if unknown or not self.methods:
            raise ValueError(f"Methods must be a non-empty subset of {METHODS}, got {self.methods}")
        # canonical order
        object.__setattr__(self, "methods", tuple(m for m in METHODS if m in self.methods))
        for i0 in self.i0:
            if i0 is not None and not i0 > 0:
                raise ValueError(f"i0 must be > 0, got {i0}")
        off = [("size", v) for v in self.sizes if v not in GRID_SIZES]
        off += [("angles", v) for v in self.angles if v not in GRID_ANGLES]
        off += [("i0", v) for v in self.i0 if v not in GRID_I0]
        for name, value in off:
            logger.warning("Experiment {} = {} is outside the reference grid", name, value)

    def points(self) -> Iterator[GridPoint]:
        for n in self.sizes:
            for a in self.angles:
                for i0 in self.i0:
                    for seed in self.seeds:
                        yield GridPoint(self.phantom, n, a, i0, seed)

    @classmethod
    def from_file(cls, path: Union[str, Path], default_seeds: Tuple[int, ...] = (0, 1, 2)) -> "ExperimentSpec":
        if not Path(path).is_file():
            raise FileNotFoundError(f"No experiment config at {path}")
        return cls.from_mapping(dotenv_values(path), default_seeds)

    @classmethod
    def from_mapping(cls, values, default_seeds: Tuple[int, ...] = (0, 1, 2)) -> "ExperimentSpec":
        def items(key):
            raw = values.get(key)
            return [v.strip() for v in raw.split(",") if v.strip()] if raw else None

        def parse_i0(v):
            return None if v.lower() in ("inf", "none", "noiseless") else float(v)

        qact = QactConfig()
        if values.get("ITERS"):
            qact = replace(qact, n_iters=int(values["ITERS"]))
        if values.get("QMAX"):
            qact = replace(qact, q_max=int(values["QMAX"]))
        if values.get("C"):
            qact = replace(qact, c=float(values["C"]))
        if values.get("K0"):
            qact = replace(qact, k0=float(values["K0"]))
        mlem = MlemConfig()
        if values.get("MLEM_ITERS"):
            mlem = replace(mlem, max_iters=int(values["MLEM_ITERS"]))
        if values.get("MLEM_INIT"):
            mlem = replace(mlem, x_init=float(values["MLEM_INIT"]))
        return cls(
            phantom=values.get("PHANTOM") or "shepp_logan",
            sizes=tuple(int(v) for v in items("SIZES") or ["16"]),
            angles=tuple(int(v) for v in items("ANGLES") or ["36"]),
            i0=tuple(parse_i0(v) for v in items("I0") or ["inf"]),
            methods=tuple(items("METHODS") or METHODS),
            seeds=tuple(int(v) for v in items("SEEDS") or default_seeds),
            ct_source=values.get("CT_SOURCE") or None,
            qact=qact,
            mlem=mlem,
        )
