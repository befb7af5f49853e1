import numpy as np
import pytest

from mapcs.instances import (
    GenSpec,
    gen_matrix,
    gen_signal,
    keyed_normals,
    make_instance,
    matrix_entry,
)


def test_moments():
    F = gen_matrix(GenSpec(n=1000, m=500, k_nonzeros=0, seed=1)).F
    assert abs(F.mean()) < 3 / np.sqrt(F.size) / np.sqrt(500)
    assert abs(F.var() * 500 - 1) < 0.01
    z = keyed_normals(7, "matrix", 200_000)
    assert abs(z.mean()) < 0.01 and abs(z.std() - 1) < 0.01


def test_deterministic():
    spec = GenSpec(n=50, m=20, k_nonzeros=5, seed=42, keep_fraction=0.5)
    assert make_instance(spec).to_json() == make_instance(spec).to_json()


def test_entry_isolation():
    spec = GenSpec(n=30, m=12, k_nonzeros=3, seed=5, keep_fraction=0.4)
    F = gen_matrix(spec).F
    rng = np.random.default_rng(0)
    for _ in range(40):
        mu, i = rng.integers(12), rng.integers(30)
        assert matrix_entry(spec, mu, i) == F[mu, i]


def test_sparsified_fraction():
    F = gen_matrix(GenSpec(n=1000, m=500, k_nonzeros=0, seed=2, keep_fraction=0.1)).F
    assert abs(np.mean(F == 0.0) - 0.9) < 0.01


def test_seeds_differ():
    a = gen_matrix(GenSpec(n=100, m=50, k_nonzeros=0, seed=1)).F
    b = gen_matrix(GenSpec(n=100, m=50, k_nonzeros=0, seed=2)).F
    assert np.mean(a != b) > 0.99


def test_exact_support_size():
    for k in (0, 1, 17, 40):
        s = gen_signal(GenSpec(n=40, m=10, k_nonzeros=k, seed=k))
        assert s.nnz == k
    assert gen_signal(GenSpec(n=40, m=10, k_nonzeros=0)).values.sum() == 0


@pytest.mark.parametrize("kwargs", [dict(n=0, m=1, k_nonzeros=0), dict(n=5, m=2, k_nonzeros=6),
                                    dict(n=5, m=2, k_nonzeros=1, keep_fraction=0.0),
                                    dict(n=5, m=2, k_nonzeros=1, seed=-1)])
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        GenSpec(**kwargs)


def test_from_ratios():
    s = GenSpec.from_ratios(500, 0.5, 0.1)
    assert (s.m, s.k_nonzeros) == (250, 50)
