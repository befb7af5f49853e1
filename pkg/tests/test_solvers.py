import numpy as np
import pytest

from mapcs import selftest, solvers
from mapcs.core import (
    AnnealSchedule,
    IterateState,
    ProblemInstance,
    SensingMatrix,
    SolverConfig,
    SparseSignal,
    Variant,
)
from mapcs.instances import GenSpec, make_instance


def eta(u, k):
    if u > k:
        return u - k
    if u < -k:
        return u + k
    return 0.0


def loop_naive(F, y, x, k):
    """Longhand reference for the naive update."""
    m, n = F.shape
    z = [y[mu] - sum(F[mu, j] * x[j] for j in range(n)) for mu in range(m)]
    out = []
    for i in range(n):
        c = sum(F[mu, i] ** 2 for mu in range(m))
        arg = sum(F[mu, i] * z[mu] for mu in range(m)) + c * x[i]
        out.append(eta(arg, k) / c)
    return np.array(out)


def loop_map_gamma(F, y, x, k, sign=+1):
    m, n = F.shape
    z = [y[mu] - sum(F[mu, j] * x[j] for j in range(n)) for mu in range(m)]
    c = [sum(F[mu, i] ** 2 for mu in range(m)) for i in range(n)]
    args = [sum(F[mu, i] * z[mu] for mu in range(m)) / c[i] + x[i] for i in range(n)]
    gamma = sum(abs(a) > k for a in args) / m
    zhat = [v / (1 + sign * gamma) for v in z]
    return np.array([eta(sum(F[mu, i] * zhat[mu] for mu in range(m)) / c[i] + x[i], k)
                     for i in range(n)])


def state(inst, x, k=0.0):
    st = IterateState.cold(inst, k)
    st.x = np.array(x, dtype=float)
    return st


@pytest.fixture
def small():
    return make_instance(GenSpec(n=12, m=7, k_nonzeros=2, seed=8))


def test_naive_hand_example(hand_instance):
    out = solvers.step_naive(state(hand_instance, np.zeros(3)), hand_instance, 0.0)
    np.testing.assert_array_equal(out.x_new, [1.0, 0.0, 0.5])


def test_identity_matrix_one_step():
    y = np.array([0.3, -2.0, 1.5, 0.0])
    inst = ProblemInstance.from_truth(SensingMatrix(np.eye(4)), SparseSignal(y))
    out = solvers.step_naive(state(inst, np.zeros(4)), inst, 0.5)
    np.testing.assert_allclose(out.x_new, [eta(v, 0.5) for v in y], atol=1e-15)


@pytest.mark.parametrize("k", [0.0, 0.05, 0.4])
def test_naive_matches_loop(small, k):
    x = np.random.default_rng(0).normal(size=12) * 0.3
    out = solvers.step_naive(state(small, x), small, k)
    np.testing.assert_allclose(out.x_new, loop_naive(small.matrix.F, small.y, x, k), atol=1e-12)


@pytest.mark.parametrize("k", [0.05, 0.4])
def test_map_gamma_matches_loop(small, k):
    x = np.random.default_rng(1).normal(size=12) * 0.3
    out = solvers.step_map_gamma(state(small, x), small, k)
    np.testing.assert_allclose(out.x_new, loop_map_gamma(small.matrix.F, small.y, x, k), atol=1e-12)


def test_amp_external_matches_loop(small):
    x = np.zeros(12)
    k = 1.0  # few active coordinates, so 1 - gamma stays positive
    out = solvers.step_amp_external(state(small, x), small, k)
    np.testing.assert_allclose(out.x_new, loop_map_gamma(small.matrix.F, small.y, x, k, sign=-1), atol=1e-12)


def test_partial_zero_gamma_is_naive(small):
    x = np.random.default_rng(2).normal(size=12)
    a = solvers.step_partial_constant(state(small, x), small, 0.1, 0.0).x_new
    b = solvers.step_naive(state(small, x), small, 0.1).x_new
    np.testing.assert_array_equal(a, b)


def test_partial_is_blend(small):
    x = np.random.default_rng(3).normal(size=12)
    naive = solvers.step_naive(state(small, x), small, 0.1).x_new
    for g in (0.5, 1.0, 3.0):
        out = solvers.step_partial_constant(state(small, x), small, 0.1, g)
        np.testing.assert_allclose(out.x_new, (g * x + naive) / (1 + g), atol=1e-14)


def test_partial_negative_gamma(small):
    with pytest.raises(ValueError):
        solvers.step_partial_constant(state(small, np.zeros(12)), small, 0.1, -1.0)


def test_amp_cold_start_is_simplified_naive(small):
    st = state(small, np.zeros(12), k=0.3)
    a = solvers.step_amp(st, small, 0.3)
    b = solvers.simplified_naive_step(st, small, 0.3)
    np.testing.assert_array_equal(a.x_new, b.x_new)
    assert a.gamma_used == 0.0


def test_unit_norm_naive_equals_simplified():
    inst = selftest.unit_norm_instance(4)
    x = np.random.default_rng(4).normal(size=inst.n) * 0.1
    a = solvers.step_naive(state(inst, x), inst, 0.2).x_new
    b = solvers.simplified_naive_step(state(inst, x), inst, 0.2).x_new
    np.testing.assert_allclose(a, b, atol=1e-13)


def test_gamma_dead_zone_monotone(small):
    x = np.random.default_rng(5).normal(size=12) * 0.2
    ks = np.linspace(0, 2, 50)
    gs = [solvers.gamma_step_dependent(state(small, x), small, k) for k in ks]
    assert all(b <= a for a, b in zip(gs, gs[1:]))
    assert all(0 <= g <= 12 / 7 for g in gs)


def test_degenerate_column_held_at_zero():
    F = np.array([[1.0, 0.0, 0.5], [0.0, 0.0, 1.0]])
    inst = ProblemInstance.from_truth(SensingMatrix(F), SparseSignal([1.0, 0.0, 0.0]))
    for fn in (solvers.step_naive, solvers.step_map_gamma, solvers.step_amp):
        out = fn(state(inst, np.zeros(3)), inst, 0.0)
        assert out.x_new[1] == 0.0 and out.degenerate_hits == 1


def test_amp_external_singular_raises():
    inst = make_instance(GenSpec(n=40, m=10, k_nonzeros=3, seed=1))
    arg = inst.matrix.F.T @ inst.y / inst.matrix.col_sq_norms
    k = float(np.sort(np.abs(arg))[::-1][10])  # exactly m coordinates active, gamma = 1
    with pytest.raises(solvers.DivergenceError):
        solvers.step_amp_external(state(inst, np.zeros(40)), inst, k)


def test_run_zero_problem():
    F = np.random.default_rng(0).normal(size=(5, 8))
    inst = ProblemInstance.from_truth(SensingMatrix(F), SparseSignal(np.zeros(8)))
    res = solvers.run(inst, SolverConfig(Variant.AMP))
    assert res.success and res.steps_taken == 1
    assert res.mse_trace == [0.0]


def test_run_identity():
    y = np.array([1.0, 0.0, -2.0, 0.0])
    inst = ProblemInstance.from_truth(SensingMatrix(np.eye(4)), SparseSignal(y))
    cfg = SolverConfig(Variant.NAIVE, anneal=AnnealSchedule(decay=0.5, k_floor=1e-12), max_steps=200)
    res = solvers.run(inst, cfg)
    assert res.success and res.mse_trace[-1] < 1e-20


def test_run_without_decay_never_succeeds(small):
    cfg = SolverConfig(Variant.MAP_GAMMA, anneal=AnnealSchedule(decay=1.0), max_steps=50)
    res = solvers.run(small, cfg)
    assert not res.success
    assert len(set(res.k_trace)) == 1


def test_run_traces(small):
    cfg = SolverConfig(Variant.MAP_GAMMA, anneal=AnnealSchedule(decay=0.9, k_floor=1e-4), max_steps=300)
    res = solvers.run(small, cfg)
    k = np.array(res.k_trace)
    above = k[k > 1e-4]
    assert np.all(np.diff(above) < 0)
    assert np.all(k >= 1e-4)
    assert len(res.mse_trace) == len(res.k_trace) == len(res.gamma_trace) == res.steps_taken
    naive = solvers.run(small, SolverConfig(Variant.NAIVE, max_steps=20))
    assert naive.gamma_trace == []


def test_run_divergence_is_failed_result():
    inst = make_instance(GenSpec(n=100, m=50, k_nonzeros=20, seed=3))
    cfg = SolverConfig(Variant.AMP_EXTERNAL, anneal=AnnealSchedule(decay=0.9), max_steps=500)
    res = solvers.run(inst, cfg)
    assert res.error is not None
    assert res.success == (np.mean((res.x_final - inst.truth.values) ** 2) < 1e-3)


def test_run_success_is_final_mse(small):
    for v in Variant:
        res = solvers.run(small, SolverConfig(v, max_steps=100))
        assert res.success == (np.mean((res.x_final - small.truth.values) ** 2) < 1e-3)


@pytest.mark.parametrize("seed", range(5))
def test_fixed_point_displacements(seed):
    d = selftest.fixed_point_displacements(seed)
    assert set(d) == {"naive", "partial", "amp", "map-gamma", "amp-external", "k=0"}
    assert max(d.values()) <= 1e-10, d
