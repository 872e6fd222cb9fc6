"""Seeded random instances for audits, demos and tests."""
import numpy as np
from gmpy2 import mpq

from .jets import HomogeneousMap, Jet, multi_indices
from .scalars import QQi
from .sequences import EventuallyPeriodic


def _rat(rng, num=3, den=4):
    return mpq(int(rng.integers(-num, num + 1)), int(rng.integers(1, den + 1)))


def random_scalar(rng, complex_=False):
    if complex_:
        return QQi(_rat(rng), _rat(rng))
    return _rat(rng)


def random_lower(d, rng, diag=None, offdiag=4, exact=True, complex_=False):
    """Lower-triangular matrix; the diagonal is drawn from ``{1/2, 1/3, 2/3, ...}`` unless given."""
    if exact:
        L = np.empty((d, d), dtype=object)
        for i in range(d):
            for j in range(d):
                if j > i:
                    L[i, j] = mpq(0)
                elif j == i:
                    L[i, j] = diag[i] if diag is not None else mpq(int(rng.integers(1, 4)), int(rng.integers(4, 7)))
                else:
                    L[i, j] = mpq(int(rng.integers(-offdiag, offdiag + 1)), 8)
                    if complex_:
                        L[i, j] = QQi(L[i, j], mpq(int(rng.integers(-2, 3)), 8))
        return L
    dtype = complex if complex_ else float
    L = np.tril(rng.standard_normal((d, d))).astype(dtype)
    if complex_:
        L = L + 1j * np.tril(rng.standard_normal((d, d)), -1)
    np.fill_diagonal(L, diag if diag is not None else rng.uniform(0.2, 0.8, d))
    return L


def random_homogeneous(d, k, rng, density=1.0, num=3, den=4, strict=False):
    coeffs = {}
    for alpha in multi_indices(d, k):
        for i in range(d):
            if strict and any(alpha[i:]):
                continue
            if rng.random() <= density:
                coeffs[(alpha, i)] = _rat(rng, num, den)
    return HomogeneousMap(d, k, coeffs)


def sorted_diagonal(d, rng):
    """Decreasing diagonal moduli in ``[1/8, 3/4]``, so the ordering condition holds."""
    vals = sorted({mpq(int(rng.integers(1, 7)), 8) for _ in range(3 * d)}, reverse=True)
    while len(vals) < d:
        vals.append(vals[-1] / 2)
    picks = sorted(rng.choice(len(vals), size=d, replace=False))
    return [vals[j] for j in picks]


def random_germ(d, K, rng, diag=None, density=0.6):
    L = random_lower(d, rng, diag=diag)
    parts = [Jet.linear(L).part(1)]
    for k in range(2, K + 1):
        parts.append(random_homogeneous(d, k, rng, density))
    return Jet(d, K, parts)


def random_germ_rule(d, K, rng, preperiod=None, period=None, diag=None):
    """Eventually periodic rule of random germs sharing one sorted diagonal per step.

    The diagonal is constant along the rule, so the ordering condition holds
    with constant 1.
    """
    pre = int(rng.integers(0, 3)) if preperiod is None else preperiod
    per = int(rng.integers(1, 4)) if period is None else period
    diag = sorted_diagonal(d, rng) if diag is None else diag
    items = [random_germ(d, K, rng, diag) for _ in range(pre + per)]
    return EventuallyPeriodic(items[pre:], items[:pre])


def random_special(d, rng, lam=mpq(1, 2), degree=3, exact=True, offdiag=0):
    """Special triangular automorphism with linear part ``lam I`` plus optional off-diagonal entries."""
    from .triangular import SpecialTriangularAuto
    L = random_lower(d, rng, diag=[lam] * d, offdiag=offdiag)
    if not exact:
        L = np.array([[complex(x) for x in row] for row in L])
    parts = [random_homogeneous(d, k, rng, density=0.5, strict=True) for k in range(2, degree + 1)]
    poly = Jet(d, max(2, degree), [p for p in parts if not p.is_zero()])
    g = SpecialTriangularAuto(L, poly)
    return g if exact else g.to_mode("float")


def diagonal_decay(diag, c=1.0):
    """Decay data at the diagonal rates of a constant sorted diagonal.

    For lower-triangular cocycles with this diagonal, products decay at
    ``max|diag|`` and inverses grow at ``1/min|diag|`` up to a constant that
    the per-step norms do not see.
    """
    from .control import DecayData
    mods = [abs(complex(x)) for x in diag]
    return DecayData(c=c, lam=max(mods), mu=1 / min(mods), rigorous=False, note="diagonal rates")
