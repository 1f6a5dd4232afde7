"""Single-flip Metropolis simulated annealing for QUBO problems.

Each read starts from a uniformly random assignment, sweeps the variables in
index order under a geometric inverse-temperature ladder and finishes with a
zero-temperature descent. Inverse temperatures act on the problem scaled so
its largest absolute coefficient is 1. Read r is seeded from
SeedSequence([seed, r]) and runs on numba's MT19937 stream; reads run in
parallel threads and a seed still gives bit-identical results. The best
state is recorded on every accepted improving flip.
"""
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from loguru import logger
from numba import njit, prange

from app.qubo.model import QuboProblem, energy
from app.solvers.base import QuboSampler, SampleResult

SEED_MASK = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class AnnealSchedule:
    n_sweeps: int = 1000
    n_reads: int = 32
    beta_start: float = 0.1
    beta_end: float = 50.0
    seed: int = 0

    def __post_init__(self):
        if self.n_sweeps < 1 or self.n_reads < 1:
            raise ValueError("n_sweeps and n_reads must be >= 1")
        if not self.beta_end > self.beta_start > 0:
            raise ValueError(f"Need beta_end > beta_start > 0, got {self.beta_start} -> {self.beta_end}")

    def betas(self) -> np.ndarray:
        return np.geomspace(self.beta_start, self.beta_end, self.n_sweeps)


@njit(cache=True)
def _flip(i, state, field, indptr, indices, data):
    sign = 1.0 if state[i] == 0 else -1.0
    state[i] = 1 - state[i]
    for p in range(indptr[i], indptr[i + 1]):
        field[indices[p]] += sign * data[p]


@njit(cache=True)
def _anneal_read(linear, indptr, indices, data, betas, seed, best):
    np.random.seed(seed)
    n = linear.shape[0]
    state = np.zeros(n, dtype=np.int8)
    for i in range(n):
        if np.random.random() < 0.5:
            state[i] = 1

    # field_i = h_i + sum_j J_ij s_j; flipping i changes the energy by +-field_i
    field = linear.copy()
    for i in range(n):
        if state[i] == 1:
            for p in range(indptr[i], indptr[i + 1]):
                field[indices[p]] += data[p]
    e = 0.0
    for i in range(n):
        if state[i] == 1:
            e += 0.5 * (linear[i] + field[i])

    best[:] = state
    best_e = e
    for beta in betas:
        for i in range(n):
            delta = field[i] if state[i] == 0 else -field[i]
            if delta <= 0.0 or np.random.random() < np.exp(-beta * delta):
                _flip(i, state, field, indptr, indices, data)
                e += delta
                if e < best_e:
                    best_e = e
                    best[:] = state

    improved = True
    while improved:
        improved = False
        for i in range(n):
            delta = field[i] if state[i] == 0 else -field[i]
            if delta < 0.0:
                _flip(i, state, field, indptr, indices, data)
                e += delta
                improved = True
    if e < best_e:
        best[:] = state


@njit(parallel=True, cache=True)
def _anneal_reads(linear, indptr, indices, data, betas, seeds):
    # one chain per row; a chain reseeds its thread's stream before drawing
    out = np.zeros((seeds.shape[0], linear.shape[0]), dtype=np.int8)
    for r in prange(seeds.shape[0]):
        _anneal_read(linear, indptr, indices, data, betas, seeds[r], out[r])
    return out


def derive_seed(seed: int, *keys: int) -> int:
    """32-bit substream seed for (seed, *keys); negative seeds wrap to their 64-bit pattern."""
    return int(np.random.SeedSequence([seed & SEED_MASK, *keys]).generate_state(1)[0])


def read_seeds(seed: int, n_reads: int) -> np.ndarray:
    return np.array([derive_seed(seed, r) for r in range(n_reads)], dtype=np.uint32)


class SimulatedAnnealingSampler(QuboSampler):
    def __init__(self, schedule: Optional[AnnealSchedule] = None):
        self.schedule = schedule or AnnealSchedule()

    def sample(self, q: QuboProblem, seed: Optional[int] = None) -> SampleResult:
        if q.n_vars < 1:
            raise ValueError("Cannot anneal a problem without variables")
        sched = self.schedule if seed is None else replace(self.schedule, seed=seed)
        scale = q.max_abs_coefficient() or 1.0
        sym = q.symmetric()
        linear = q.linear / scale
        data = sym.data / scale
        indptr = sym.indptr.astype(np.int64)
        indices = sym.indices.astype(np.int64)
        betas = sched.betas()

        reads = _anneal_reads(linear, indptr, indices, data, betas, read_seeds(sched.seed, sched.n_reads))
        reads = reads.astype(np.uint8)
        energies = np.array([energy(q, b) for b in reads])
        best = int(np.argmin(energies))
        logger.debug("Annealed {} vars: best {:.6g} over {} reads (seed {})",
                     q.n_vars, energies[best], sched.n_reads, sched.seed)
        return SampleResult(reads[best], float(energies[best]), energies)


def anneal(q: QuboProblem, sched: AnnealSchedule) -> SampleResult:
    return SimulatedAnnealingSampler(sched).sample(q)
