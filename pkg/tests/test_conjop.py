import numpy as np
import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from triconj import linalg
from triconj.conjop import (QuotientClass, TriangularMatrix, apply_conjugacy, conjugacy_matrix,
                            diag_quotient_bound, partition_max, quotient_block, quoz_bound,
                            svil_expansion)
from triconj.errors import SizeGuardError
from triconj.instances import random_homogeneous, random_lower
from triconj.jets import STRICT, HomogeneousMap, binom_count, multi_indices, project_T, triangularity


def mono(alpha, i, c=1):
    return HomogeneousMap.monomial(alpha, i, c)


def exact(rows):
    return np.array([[mpq(x) for x in r] for r in rows], dtype=object)


def to_float(M):
    return np.array([[complex(x) for x in row] for row in M])


def test_triangular_matrix_validation():
    with pytest.raises(ValueError):
        TriangularMatrix(exact([[1, 1], [0, 1]]))
    with pytest.raises(ZeroDivisionError):
        TriangularMatrix(exact([[1, 0], [1, 0]]))
    L = TriangularMatrix(exact([[2, 0], [1, 4]]))
    assert list(L.diagonal) == [2, 4]
    assert np.all((L @ L.inverse()).entries == linalg.eye(2))


def test_apply_diagonal_eigenvalue():
    d1, d2 = mpq(1, 2), mpq(1, 3)
    out = apply_conjugacy(exact([[d1, 0], [0, d2]]), mono((2, 0), 1))
    assert out == mono((2, 0), 1, d1 ** 2 / d2)


def test_apply_identity():
    p = random_homogeneous(3, 3, np.random.default_rng(0))
    assert apply_conjugacy(linalg.eye(3), p) == p


def test_apply_shear_hand_example():
    out = apply_conjugacy(exact([[1, 0], [1, 1]]), mono((2, 0), 0))
    assert out == mono((2, 0), 0) - mono((2, 0), 1)


def test_apply_singular():
    with pytest.raises(ZeroDivisionError):
        apply_conjugacy(exact([[1, 0], [1, 0]]), mono((2, 0), 0))


def test_contravariance():
    rng = np.random.default_rng(1)
    L, M = random_lower(3, rng), random_lower(3, rng)
    p = random_homogeneous(3, 2, rng)
    assert apply_conjugacy(L @ M, p) == apply_conjugacy(M, apply_conjugacy(L, p))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_T_invariance(seed):
    rng = np.random.default_rng(seed)
    L = random_lower(3, rng, complex_=True)
    p = random_homogeneous(3, 3, rng, strict=True)
    out = apply_conjugacy(L, p)
    assert out.is_zero() or triangularity(out) == STRICT


def test_conjugacy_matrix_diagonal_and_identity():
    delta = [mpq(1, 2), mpq(1, 3)]
    M = conjugacy_matrix(exact([[delta[0], 0], [0, delta[1]]]), 3)
    assert linalg.is_lower(M) and linalg.is_lower(M.T)
    expected = sorted(delta[0] ** a[0] * delta[1] ** a[1] / delta[i] for a in multi_indices(2, 3) for i in range(2))
    assert sorted(np.diag(M)) == expected
    assert np.all(conjugacy_matrix(linalg.eye(2), 2) == linalg.eye(6))


@pytest.mark.parametrize("d,k", [(2, 2), (2, 3), (3, 2)])
def test_conjugacy_matrix_oracle(d, k):
    rng = np.random.default_rng(d * 10 + k)
    L = random_lower(d, rng, complex_=True)
    M = conjugacy_matrix(L, k)
    for _ in range(3):
        p = random_homogeneous(d, k, rng)
        assert np.all(M @ p.to_vector() == apply_conjugacy(L, p).to_vector())


def test_conjugacy_matrix_lower_triangular():
    L = random_lower(3, np.random.default_rng(2))
    assert linalg.is_lower(conjugacy_matrix(L, 3))


def test_conjugacy_matrix_size_guard():
    with pytest.raises(SizeGuardError):
        conjugacy_matrix(linalg.eye(4), 6, max_dim=100)


@pytest.mark.parametrize("delta,k,expected", [
    ((mpq(1, 2), mpq(1, 4)), 2, mpq(3, 2)),
    ((mpq(1, 4), mpq(1, 2)), 2, mpq(3)),
    ((1, 1, 1), 3, binom_count(3, 3)),
])
def test_diag_quotient_bound(delta, k, expected):
    assert diag_quotient_bound(delta, k) == expected


def test_diag_quotient_bound_zero():
    with pytest.raises(ZeroDivisionError):
        diag_quotient_bound([mpq(1), mpq(0)], 2)


@pytest.mark.parametrize("delta", [(mpq(1, 2), mpq(1, 4), mpq(1, 3)), (mpq(1, 5), mpq(3, 4), mpq(2))])
def test_diag_quotient_eigenvalues_dominated(delta):
    k = 3
    d = len(delta)
    D = random_lower(d, np.random.default_rng(0), diag=list(delta), offdiag=0)
    Q = quotient_block(conjugacy_matrix(D, k), d, k)
    bound = diag_quotient_bound(delta, k) / binom_count(k, d)
    assert max(abs(x) for x in np.diag(Q)) <= bound


def test_quotient_class():
    p = mono((2, 0), 1) + mono((0, 2), 0)
    q = QuotientClass(p)
    assert project_T(q.representative)[0].is_zero()
    assert q == QuotientClass(mono((0, 2), 0))
    assert (q.d, q.k) == (2, 2)


def test_svil_single_factor():
    rng = np.random.default_rng(3)
    L = random_lower(2, rng)
    p = random_homogeneous(2, 2, rng)
    assert svil_expansion([L], p) == apply_conjugacy(L, p)


def test_svil_diagonal():
    rng = np.random.default_rng(4)
    Ds = [random_lower(3, rng, offdiag=0) for _ in range(3)]
    p = random_homogeneous(3, 2, rng)
    assert svil_expansion(Ds, p) == apply_conjugacy(Ds[2] @ Ds[1] @ Ds[0], p)


@pytest.mark.parametrize("seed", range(5))
def test_svil_random_exact_and_float(seed):
    rng = np.random.default_rng(seed)
    Ls = [random_lower(2, rng) for _ in range(3)]
    p = random_homogeneous(2, 2, rng)
    prod_ = Ls[2] @ Ls[1] @ Ls[0]
    assert svil_expansion(Ls, p) == apply_conjugacy(prod_, p)
    got = svil_expansion([to_float(L) for L in Ls], p).to_vector().astype(complex)
    want = apply_conjugacy(prod_, p).to_vector().astype(complex)
    assert np.max(np.abs(got - want)) < 1e-10


def test_svil_swapped_is_inverse_product():
    rng = np.random.default_rng(5)
    Ls = [random_lower(2, rng) for _ in range(2)]
    p = random_homogeneous(2, 2, rng)
    inv = linalg.inv(Ls[0]) @ linalg.inv(Ls[1])
    assert svil_expansion(Ls, p, arrangement="swapped") == apply_conjugacy(inv, p)
    with pytest.raises(ValueError):
        svil_expansion([], p)


def test_partition_max_constant_cocycle():
    diag = [mpq(1, 2), mpq(1, 4)]
    # every segment of length m has phi = (1/2)^m (k=2): the product multiplies out
    assert partition_max([diag] * 4, 2, 3) == mpq(1, 16)
    # the reversed order has ratio 2 per step inside a segment
    assert partition_max([diag[::-1]] * 4, 2, 1) == mpq(1, 16) * 2 ** 4


def test_quoz_single_diagonal():
    D = exact([[mpq(1, 2), 0], [0, mpq(1, 4)]])
    cert = quoz_bound([D], 2)
    assert cert.N == 3 and cert.ell == 1
    assert np.isfinite(cert.explicit_bound)
    assert cert.explicit_bound >= diag_quotient_bound([mpq(1, 2), mpq(1, 4)], 2)
    assert cert.holds


@pytest.mark.parametrize("seed", range(10))
def test_quoz_random(seed):
    rng = np.random.default_rng(seed)
    d, k, ell = 2 + seed % 2, 2 + (seed // 2) % 2, 1 + seed % 4
    cert = quoz_bound([random_lower(d, rng) for _ in range(ell)], k)
    assert cert.holds
    assert cert.quotient_norm <= cert.explicit_bound
    assert cert.to_json()["N"] == (k + 1) * (d - 1)
