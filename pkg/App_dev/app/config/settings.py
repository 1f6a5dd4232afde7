import os
from dataclasses import dataclass, field
from typing import List

from dotenv import load_dotenv

load_dotenv()


def _env(name: str, default: str) -> str:
    return os.getenv(name, default)


@dataclass
class AppSettings:
    output_dir: str = field(default_factory=lambda: _env("OUTPUT_DIR", "./output"))
    log_level: str = field(default_factory=lambda: _env("LOG_LEVEL", "INFO"))
    grid_workers: int = field(default_factory=lambda: int(_env("GRID_WORKERS", "1")))
    default_seeds: str = field(default_factory=lambda: _env("DEFAULT_SEEDS", "0,1,2"))
    anneal_sweeps: int = field(default_factory=lambda: int(_env("ANNEAL_SWEEPS", "1000")))
    anneal_reads: int = field(default_factory=lambda: int(_env("ANNEAL_READS", "32")))
    anneal_beta0: float = field(default_factory=lambda: float(_env("ANNEAL_BETA0", "0.1")))
    anneal_beta1: float = field(default_factory=lambda: float(_env("ANNEAL_BETA1", "50.0")))
    ct_source: str = field(default_factory=lambda: _env("CT_SOURCE", ""))

    @property
    def seeds(self) -> List[int]:
        try:
            return [int(s) for s in self.default_seeds.split(",") if s.strip()]
        except ValueError:
            return [0, 1, 2]
