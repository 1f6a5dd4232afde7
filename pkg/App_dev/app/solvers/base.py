from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.qubo.model import QuboProblem


@dataclass(frozen=True, eq=False)
class SampleResult:
    best_bits: np.ndarray
    best_energy: float
    energies: np.ndarray  # best energy of every read


class QuboSampler(ABC):
    """Anything that minimizes a QuboProblem: classical annealer, exact enumeration, hardware."""

    @abstractmethod
    def sample(self, q: QuboProblem, seed: Optional[int] = None) -> SampleResult:
        ...
