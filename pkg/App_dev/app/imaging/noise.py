"""Poisson photon statistics on the detector.

Counts come from numpy's PCG64 generator seeded through SeedSequence;
``Generator.poisson`` samples exactly by inversion for small means and by
PTRS transformed rejection above, so a seed reproduces across platforms.
"""
from dataclasses import dataclass

import numpy as np

from app.imaging.projector import Sinogram

SEED_MASK = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class NoiseConfig:
    i0: float
    seed: int = 0

    def __post_init__(self):
        if not (self.i0 > 0 and np.isfinite(self.i0)):
            raise ValueError(f"Source intensity i0 must be finite and > 0, got {self.i0}")

    def rng(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed & SEED_MASK)))


def draw_counts(y: Sinogram, cfg: NoiseConfig) -> np.ndarray:
    """Detected photon counts k_i ~ Poisson(i0 * exp(-y_i))."""
    mean = cfg.i0 * np.exp(-y.values)
    return cfg.rng().poisson(mean).astype(np.float64)


def counts_to_projection(counts: np.ndarray, i0: float) -> np.ndarray:
    """Beer-Lambert inversion with a floor of one photon."""
    return np.log(i0 / np.maximum(counts, 1.0))


def apply_noise(y: Sinogram, cfg: NoiseConfig) -> Sinogram:
    if np.any(y.values < 0):
        raise ValueError("Noise is simulated on non-negative line integrals only")
    return Sinogram(counts_to_projection(draw_counts(y, cfg), cfg.i0), y.geometry)
