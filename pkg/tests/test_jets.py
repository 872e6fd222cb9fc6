import numpy as np
import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from triconj.errors import SizeGuardError
from triconj.instances import random_homogeneous
from triconj.jets import (NEITHER, STRICT, TRIANGULAR, HomogeneousMap, Jet, basis,
                          compose_jets, compose_poly, dim_H, evaluate, homogeneous_part,
                          multi_indices, norms, project_T, torus_grid, triangularity)
from triconj.scalars import FLOAT, QQi


def mono(alpha, i, c=1):
    return HomogeneousMap.monomial(alpha, i, c)


def jet1(*coeffs):
    """d=1 jet with coefficients of z, z^2, ..."""
    K = len(coeffs)
    return Jet(1, K, [mono((k + 1,), 0, mpq(c)) for k, c in enumerate(coeffs) if c])


def rand_jet(d, K, rng, linear=True):
    parts = [random_homogeneous(d, k, rng, density=0.6) for k in range(1 if linear else 2, K + 1)]
    return Jet(d, K, parts)


@pytest.mark.parametrize("d,k,expected", [(2, 2, 6), (1, 5, 1), (1, 1, 1), (3, 2, 18), (2, 3, 8)])
def test_dim_H(d, k, expected):
    assert dim_H(d, k) == expected
    assert len(basis(d, k)) == expected


def test_dim_H_range_error():
    with pytest.raises(OverflowError):
        dim_H(200, 200)


def test_multi_indices_colex():
    assert list(multi_indices(2, 2)) == [(2, 0), (1, 1), (0, 2)]
    assert all(sum(a) == 3 for a in multi_indices(3, 3))


def test_compose_hand_example():
    h = jet1(1, 1)
    f = jet1(2)
    out = compose_jets(h, f.with_K(2), 2)
    assert out == jet1(2, 4)


def test_compose_identity():
    rng = np.random.default_rng(0)
    h = rand_jet(2, 4, rng)
    assert compose_jets(h, Jet.identity(2, 4), 4) == h
    assert compose_jets(Jet.identity(2, 4), h, 4) == h


def test_compose_pointwise_oracle():
    rng = np.random.default_rng(1)
    h, f = rand_jet(2, 4, rng), rand_jet(2, 4, rng)
    full = compose_poly(h, f)
    trunc = compose_jets(h, f, 4)
    pts = 0.05 * (rng.standard_normal((20, 2)) + 1j * rng.standard_normal((20, 2)))
    lhs = evaluate(h.to_mode(FLOAT), evaluate(f.to_mode(FLOAT), pts))
    tail = Jet(2, full.K, [p for k, p in full.parts.items() if k > 4])
    rhs = evaluate(trunc.to_mode(FLOAT), pts) + evaluate(tail.to_mode(FLOAT), pts)
    assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_compose_associative():
    rng = np.random.default_rng(2)
    h, g, f = (rand_jet(2, 4, rng) for _ in range(3))
    assert compose_jets(compose_jets(h, g, 4), f, 4) == compose_jets(h, compose_jets(g, f, 4), 4)


def test_degree_locality():
    rng = np.random.default_rng(3)
    h, f = rand_jet(2, 4, rng), rand_jet(2, 4, rng)
    bumped = f.replace(f.part(4) + random_homogeneous(2, 4, rng))
    for k in (1, 2, 3):
        assert compose_jets(h, f, 4).part(k) == compose_jets(h, bumped, 4).part(k)


def test_compose_dimension_mismatch():
    with pytest.raises(ValueError):
        compose_jets(Jet.identity(2, 2), Jet.identity(3, 2))


def test_homogeneous_part():
    j = jet1(1, 1)
    assert homogeneous_part(j, 2) == mono((2,), 0)
    assert homogeneous_part(Jet.identity(2, 3), 2).is_zero()


def test_evaluate_examples():
    p = mono((2, 0), 1)
    assert list(evaluate(p, [mpq(2), mpq(5)])) == [0, 4]
    np.testing.assert_allclose(evaluate(p, np.array([2.0, 5.0])), [0, 4])
    assert not np.any(evaluate(HomogeneousMap.zero(2, 3), np.ones(2)))


def test_evaluate_grouped_vs_naive():
    rng = np.random.default_rng(4)
    p = random_homogeneous(3, 4, rng)
    z = rng.standard_normal((10, 3)) + 1j * rng.standard_normal((10, 3))
    naive = np.zeros((10, 3), dtype=complex)
    for (alpha, i), c in p.items():
        naive[:, i] += complex(c) * np.prod(z ** np.array(alpha), axis=1)
    assert np.max(np.abs(evaluate(p.to_mode(FLOAT), z) - naive)) < 1e-12


def test_evaluate_exact_gaussian():
    p = mono((1, 1), 0, QQi(mpq(1), mpq(1)))
    out = evaluate(p, [QQi(0, 1), mpq(2)])
    assert out[0] == QQi(-2, 2)


@pytest.mark.parametrize("p", [mono((1, 1), 0), mono((2, 0), 0)])
def test_norm_sandwich_monomials(p):
    s = norms(p)
    assert s.coeff_max == 1
    assert s.upper_bound == 3
    assert abs(s.sampled_sup - 1) < 1e-12


def test_norms_zero_and_empty():
    s = norms(HomogeneousMap.zero(2, 2))
    assert (s.coeff_max, s.sampled_sup, s.upper_bound) == (0, 0, 0)
    with pytest.raises(ValueError):
        norms(mono((2, 0), 0), sampling=np.zeros((0, 2)))


def test_torus_grid_guard():
    with pytest.raises(SizeGuardError):
        torus_grid(6, 64)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 3), st.integers(1, 4))
def test_norm_sandwich_inequality(seed, d, k):
    p = random_homogeneous(d, k, np.random.default_rng(seed))
    s = norms(p, sampling=8 if d == 3 else 16)
    assert s.coeff_max <= s.upper_bound
    assert s.sampled_sup <= s.upper_bound * (1 + 1e-9)


@pytest.mark.parametrize("p,expected", [
    (mono((2, 0), 1), STRICT),
    (mono((0, 2), 1), TRIANGULAR),
    (mono((0, 2), 0), NEITHER),
])
def test_triangularity(p, expected):
    assert triangularity(p) == expected


def test_project_T():
    t_part, q_part = mono((2, 0), 1), mono((0, 2), 0)
    t, q = project_T(t_part + q_part)
    assert t == t_part and q == q_part
    assert project_T(t_part) == (t_part, HomogeneousMap.zero(2, 2))
    assert project_T(q_part) == (HomogeneousMap.zero(2, 2), q_part)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_project_T_idempotent_linear(seed):
    rng = np.random.default_rng(seed)
    p, r = random_homogeneous(3, 3, rng), random_homogeneous(3, 3, rng)
    t, q = project_T(p)
    assert project_T(t) == (t, HomogeneousMap.zero(3, 3))
    assert t + q == p
    tp, qp = project_T(p + r)
    assert tp == t + project_T(r)[0]
    if not t.is_zero():
        assert triangularity(t) == STRICT


def test_triangular_composition_closure():
    rng = np.random.default_rng(5)
    for _ in range(10):
        a = Jet(3, 3, [random_homogeneous(3, k, rng, strict=True) for k in (2, 3)])
        b = Jet(3, 3, [random_homogeneous(3, k, rng, strict=True) for k in (2, 3)])
        # identity plus strictly triangular parts stay in the same class
        ida, idb = Jet.identity(3, 3) + a, Jet.identity(3, 3) + b
        c = compose_jets(ida, idb, 3) - Jet.identity(3, 3)
        assert triangularity(c) in (STRICT,) or not c.parts


def test_json_roundtrip():
    rng = np.random.default_rng(6)
    j = rand_jet(2, 3, rng)
    assert Jet.from_json(j.to_json()) == j
    obj = mono((2, 0), 1, mpq(-3, 7)).to_json()
    assert obj["terms"][0] == {"alpha": [2, 0], "i": 2, "re": "-3/7", "im": "0"}


def test_equality_drops_zeros():
    a = HomogeneousMap(2, 2, {((2, 0), 0): mpq(1), ((0, 2), 1): mpq(0)})
    assert a == mono((2, 0), 0)


def test_invalid_multi_index():
    with pytest.raises(ValueError):
        HomogeneousMap(2, 2, {((1, 0), 0): mpq(1)})
