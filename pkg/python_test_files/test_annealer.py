import numpy as np
import pytest
import scipy.sparse as sp

from app.errors import SizeCapError
from app.qubo.model import QuboProblem, energy
from app.solvers.annealer import AnnealSchedule, SimulatedAnnealingSampler, anneal, derive_seed
from app.solvers.base import QuboSampler
from app.solvers.exhaustive import MAX_VARS, ExhaustiveSolver, exhaustive_solve


def random_qubo(rng, n_vars):
    upper = np.triu(rng.uniform(-1, 1, size=(n_vars, n_vars)), k=1)
    return QuboProblem(rng.uniform(-1, 1, size=n_vars), sp.csr_matrix(upper))


def brute_force(q):
    tol = 1e-12 * q.max_abs_coefficient()
    best_e, best_code = np.inf, None
    for code in range(1 << q.n_vars):
        bits = (code >> np.arange(q.n_vars)) & 1
        e = energy(q, bits)
        if e < best_e - tol:
            best_e, best_code = e, code
    return best_e, best_code


def test_samplers_share_the_contract():
    assert issubclass(SimulatedAnnealingSampler, QuboSampler)
    assert issubclass(ExhaustiveSolver, QuboSampler)


def test_schedule_validation():
    with pytest.raises(ValueError):
        AnnealSchedule(n_sweeps=0)
    with pytest.raises(ValueError):
        AnnealSchedule(beta_start=1.0, beta_end=0.5)
    betas = AnnealSchedule(n_sweeps=5, beta_start=0.1, beta_end=10.0).betas()
    assert betas[0] == pytest.approx(0.1) and betas[-1] == pytest.approx(10.0)
    np.testing.assert_allclose(betas[1:] / betas[:-1], betas[1] / betas[0])


def test_constant_problem():
    q = QuboProblem(np.zeros(5), sp.csr_matrix((5, 5)), offset=5.0)
    assert anneal(q, AnnealSchedule(n_sweeps=10, n_reads=2)).best_energy == 5.0
    assert exhaustive_solve(q).best_energy == 5.0
    np.testing.assert_array_equal(exhaustive_solve(q).best_bits, 0)


def test_single_variable():
    q = QuboProblem.from_terms([-1.0], {})
    res = exhaustive_solve(q)
    np.testing.assert_array_equal(res.best_bits, [1])
    assert res.best_energy == -1.0
    assert anneal(q, AnnealSchedule(n_sweeps=10, n_reads=1)).best_energy == -1.0


def test_one_ray_example():
    q = QuboProblem.from_terms([-0.25, 0.0], {(0, 1): 1.0}, offset=0.25)
    res = anneal(q, AnnealSchedule())
    np.testing.assert_array_equal(res.best_bits, [1, 0])
    assert res.best_energy == pytest.approx(0.0, abs=1e-15)


def test_exhaustive_matches_brute_force(rng):
    for _ in range(10):
        q = random_qubo(rng, 8)
        best_e, best_code = brute_force(q)
        res = exhaustive_solve(q)
        assert res.best_energy == pytest.approx(best_e, abs=1e-12)
        assert int((res.best_bits.astype(int) << np.arange(8)).sum()) == best_code


def test_exhaustive_ties_prefer_lowest_code():
    # six assignments tie at -1; code 1 is the lowest
    q = QuboProblem.from_terms([-1.0, -1.0, -1.0], {(0, 1): 1.0, (0, 2): 1.0, (1, 2): 1.0})
    np.testing.assert_array_equal(exhaustive_solve(q).best_bits, [1, 0, 0])


def test_exhaustive_on_tiny_coefficients(rng):
    res = exhaustive_solve(QuboProblem.from_terms([-1e-12], {}))
    np.testing.assert_array_equal(res.best_bits, [1])
    assert res.best_energy == -1e-12

    q = random_qubo(rng, 10)
    tiny = QuboProblem(q.linear * 1e-12, q.quadratic * 1e-12)
    best_e, best_code = brute_force(tiny)
    res = exhaustive_solve(tiny)
    assert best_e < 0
    assert res.best_energy == pytest.approx(best_e, rel=1e-9)
    assert int((res.best_bits.astype(int) << np.arange(10)).sum()) == best_code
    assert res.best_energy == pytest.approx(exhaustive_solve(q).best_energy * 1e-12, rel=1e-9)


def test_exhaustive_size_cap():
    q = QuboProblem(np.zeros(MAX_VARS + 1), sp.csr_matrix((MAX_VARS + 1, MAX_VARS + 1)))
    with pytest.raises(SizeCapError):
        exhaustive_solve(q)


def test_anneal_matches_exhaustive_on_random_problems():
    rng = np.random.default_rng(12345)
    hits = 0
    for i in range(100):
        q = random_qubo(rng, 12)
        res = anneal(q, AnnealSchedule(seed=i))
        hits += res.best_energy <= exhaustive_solve(q).best_energy + 1e-9
    assert hits >= 95


def test_result_invariants(rng):
    q = random_qubo(rng, 16)
    res = anneal(q, AnnealSchedule(n_sweeps=200, n_reads=8, seed=4))
    assert res.best_energy == energy(q, res.best_bits)
    assert res.best_energy == res.energies.min()
    assert res.energies.shape == (8,)
    random_best = min(energy(q, rng.integers(0, 2, 16)) for _ in range(8))
    assert res.best_energy <= random_best


def test_seed_determinism(rng):
    q = random_qubo(rng, 20)
    sched = AnnealSchedule(n_sweeps=100, n_reads=4, seed=99)
    a, b = anneal(q, sched), anneal(q, sched)
    np.testing.assert_array_equal(a.best_bits, b.best_bits)
    np.testing.assert_array_equal(a.energies, b.energies)
    c = SimulatedAnnealingSampler(sched).sample(q, seed=99)
    np.testing.assert_array_equal(a.energies, c.energies)


def test_scale_invariance(rng):
    q = random_qubo(rng, 14)
    tiny = QuboProblem(q.linear * 1e-6, q.quadratic * 1e-6)
    sched = AnnealSchedule(n_sweeps=200, n_reads=4, seed=1)
    np.testing.assert_array_equal(anneal(q, sched).best_bits, anneal(tiny, sched).best_bits)


def test_derive_seed_is_stable():
    assert derive_seed(0, 1) == derive_seed(0, 1)
    assert derive_seed(0, 1) != derive_seed(0, 2)
    assert 0 <= derive_seed(7, 3) < 2 ** 32


def test_reads_do_not_depend_on_read_count(rng):
    q = random_qubo(rng, 18)
    few = anneal(q, AnnealSchedule(n_sweeps=150, n_reads=3, seed=5))
    many = anneal(q, AnnealSchedule(n_sweeps=150, n_reads=12, seed=5))
    np.testing.assert_array_equal(few.energies, many.energies[:3])
    assert many.best_energy <= few.best_energy
    for r, e in enumerate(many.energies):
        assert e == anneal(q, AnnealSchedule(n_sweeps=150, n_reads=r + 1, seed=5)).energies[r]


def test_negative_seed(rng):
    q = random_qubo(rng, 10)
    a = anneal(q, AnnealSchedule(n_sweeps=50, n_reads=2, seed=-1))
    b = anneal(q, AnnealSchedule(n_sweeps=50, n_reads=2, seed=2 ** 64 - 1))
    np.testing.assert_array_equal(a.energies, b.energies)
    assert derive_seed(-1, 4) == derive_seed(2 ** 64 - 1, 4)
    assert a.best_energy == energy(q, a.best_bits) == a.energies.min()
