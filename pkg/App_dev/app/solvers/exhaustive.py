from typing import Optional

import numpy as np
from numba import njit

from app.errors import SizeCapError
from app.qubo.model import QuboProblem, energy
from app.solvers.base import QuboSampler, SampleResult

MAX_VARS = 24


@njit(cache=True)
def _enumerate(linear, indptr, indices, data, tol):
    # Count through assignments in little-endian integer order, updating the
    # energy incrementally; ties keep the lowest code.
    n = linear.shape[0]
    state = np.zeros(n, dtype=np.int8)
    field = linear.copy()
    e = 0.0
    best_e = 0.0
    best_code = 0
    for code in range(1, 1 << n):
        i = 0
        while state[i] == 1:
            e -= field[i]
            state[i] = 0
            for p in range(indptr[i], indptr[i + 1]):
                field[indices[p]] -= data[p]
            i += 1
        e += field[i]
        state[i] = 1
        for p in range(indptr[i], indptr[i + 1]):
            field[indices[p]] += data[p]
        if e < best_e - tol:
            best_e = e
            best_code = code
    return best_code


class ExhaustiveSolver(QuboSampler):
    """Exact minimum by enumerating all 2^n assignments (n <= 24)."""

    def sample(self, q: QuboProblem, seed: Optional[int] = None) -> SampleResult:
        if q.n_vars > MAX_VARS:
            raise SizeCapError(f"Exhaustive search is capped at {MAX_VARS} variables, got {q.n_vars}")
        sym = q.symmetric()
        tol = 1e-12 * q.max_abs_coefficient()
        code = _enumerate(q.linear.copy(), sym.indptr.astype(np.int64), sym.indices.astype(np.int64),
                          sym.data.copy(), tol)
        bits = ((code >> np.arange(q.n_vars)) & 1).astype(np.uint8)
        best = energy(q, bits)
        return SampleResult(bits, best, np.array([best]))


def exhaustive_solve(q: QuboProblem) -> SampleResult:
    return ExhaustiveSolver().sample(q)
