"""Homogeneous polynomial maps of C^d and truncated formal series (jets).

A degree-k homogeneous map is stored sparsely as ``{(alpha, i): c}`` meaning
``sum c * z**alpha * e_i`` with ``|alpha| = k`` and a 0-based component index
``i``. A :class:`Jet` holds the homogeneous parts of degrees ``1..K``.

Composition works on packed exponents: a multi-index ``alpha`` is stored as
the integer ``sum alpha_j * B**j`` with ``B = K + 1``, so adding exponents is
integer addition and products of truncated polynomials are plain dict loops.

Examples
--------
>>> h = Jet(1, 2, [HomogeneousMap.monomial((1,), 0), HomogeneousMap.monomial((2,), 0)])
>>> f = Jet(1, 2, [HomogeneousMap.monomial((1,), 0, 2)])
>>> compose_jets(h, f, 2).part(2).coeff((2,), 0)
mpq(4,1)
"""
from functools import lru_cache
from math import comb

import numpy as np
from gmpy2 import mpq

from .errors import SizeGuardError
from .scalars import (EXACT, FLOAT, convert, is_exact, scalar_from_json,
                      scalar_to_json)

STRICT = "strictly_triangular"
TRIANGULAR = "triangular"
NEITHER = "neither"

_MAX_DIM = 10 ** 7


def binom_count(k, d):
    """c(k, d) = C(k+d-1, d-1), the number of monomials of degree k in d variables."""
    return comb(k + d - 1, d - 1)


def dim_H(d, k):
    """Dimension ``d * C(k+d-1, d-1)`` of the space of degree-k homogeneous maps.

    >>> dim_H(2, 2), dim_H(3, 2)
    (6, 18)
    """
    if int(d) != d or int(k) != k or d < 1 or k < 1:
        raise ValueError("d and k must be positive integers")
    n = d * binom_count(k, d)
    if n > _MAX_DIM:
        raise OverflowError(f"dim_H({d}, {k}) = {n} exceeds {_MAX_DIM}")
    return n


@lru_cache(maxsize=None)
def multi_indices(d, k):
    """All ``alpha`` with ``|alpha| = k`` in colexicographic order."""
    out = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            out.append(prefix + (remaining,))
            return
        for a in range(remaining + 1):
            rec(prefix + (a,), remaining - a, slots - 1)

    rec((), k, d)
    return tuple(sorted(out, key=lambda a: a[::-1]))


def weight(alpha, i):
    """Order weight ``sum_j j*alpha_j - i`` (0-based).

    Conjugation by a lower-triangular matrix only moves mass to basis
    elements of strictly smaller weight, apart from the diagonal term.
    """
    return sum(j * a for j, a in enumerate(alpha)) - i


@lru_cache(maxsize=None)
def basis(d, k):
    """Basis ``(alpha, i)`` of degree-k maps sorted by decreasing weight.

    In this order the matrix of ``A_L`` is lower triangular whenever ``L`` is.
    """
    items = [(a, i) for a in multi_indices(d, k) for i in range(d)]
    return tuple(sorted(items, key=lambda t: (-weight(*t), t[0][::-1], t[1])))


@lru_cache(maxsize=None)
def basis_position(d, k):
    return {b: n for n, b in enumerate(basis(d, k))}


def in_T(alpha, i):
    """Membership of ``(alpha, i)`` in the strictly triangular index set."""
    return all(a == 0 for a in alpha[i:])


def _is_zero(c):
    return c == 0


class HomogeneousMap:
    """Degree-k homogeneous polynomial map ``C^d -> C^d``."""

    __slots__ = ("d", "k", "coeffs")

    def __init__(self, d, k, coeffs=None, check=True):
        self.d = int(d)
        self.k = int(k)
        coeffs = dict(coeffs or {})
        if check:
            for (alpha, i) in coeffs:
                if len(alpha) != self.d or sum(alpha) != self.k or min(alpha) < 0:
                    raise ValueError(f"multi-index {alpha} invalid for d={d}, k={k}")
                if not 0 <= i < self.d:
                    raise ValueError(f"component {i} out of range")
        self.coeffs = {key: c for key, c in coeffs.items() if not _is_zero(c)}

    @classmethod
    def zero(cls, d, k):
        return cls(d, k, {}, check=False)

    @classmethod
    def monomial(cls, alpha, i, c=1):
        alpha = tuple(alpha)
        return cls(len(alpha), sum(alpha), {(alpha, i): convert(c, EXACT) if isinstance(c, int) else c})

    def coeff(self, alpha, i):
        return self.coeffs.get((tuple(alpha), i), mpq(0))

    def items(self):
        """Nonzero terms in colexicographic order."""
        return sorted(self.coeffs.items(), key=lambda t: (t[0][0][::-1], t[0][1]))

    def is_zero(self):
        return not self.coeffs

    def __eq__(self, other):
        if not isinstance(other, HomogeneousMap):
            return NotImplemented
        return (self.d, self.k) == (other.d, other.k) and self.coeffs == other.coeffs

    __hash__ = None

    def _check_same(self, other):
        if (self.d, self.k) != (other.d, other.k):
            raise ValueError("dimension or degree mismatch")

    def __add__(self, other):
        self._check_same(other)
        out = dict(self.coeffs)
        for key, c in other.coeffs.items():
            out[key] = out[key] + c if key in out else c
        return HomogeneousMap(self.d, self.k, out, check=False)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return HomogeneousMap(self.d, self.k, {key: -c for key, c in self.coeffs.items()}, check=False)

    def scale(self, s):
        return HomogeneousMap(self.d, self.k, {key: s * c for key, c in self.coeffs.items()}, check=False)

    __mul__ = __rmul__ = scale

    def map_coeffs(self, fn):
        return HomogeneousMap(self.d, self.k, {key: fn(c) for key, c in self.coeffs.items()}, check=False)

    def to_mode(self, mode):
        return self.map_coeffs(lambda c: convert(c, mode))

    def max_coeff(self):
        return max((abs(c) for c in self.coeffs.values()), default=mpq(0))

    def to_vector(self, mode=EXACT):
        """Coefficient vector in :func:`basis` order."""
        pos = basis_position(self.d, self.k)
        zero = mpq(0) if mode == EXACT else 0j
        v = np.full(len(pos), zero, dtype=object if mode == EXACT else complex)
        for key, c in self.coeffs.items():
            v[pos[key]] = c
        return v

    @classmethod
    def from_vector(cls, d, k, v):
        b = basis(d, k)
        if len(v) != len(b):
            raise ValueError("vector length does not match dim_H")
        return cls(d, k, {b[n]: v[n] for n in range(len(b))}, check=False)

    def __repr__(self):
        terms = " + ".join(f"({c})*z^{a}e{i + 1}" for (a, i), c in self.items()) or "0"
        return f"HomogeneousMap(d={self.d}, k={self.k}: {terms})"

    def to_json(self):
        return {"d": self.d, "k": self.k, "terms": _terms_json(self)}

    @classmethod
    def from_json(cls, obj):
        return cls(obj["d"], obj["k"], _terms_from_json(obj["terms"]))


def _terms_json(p):
    out = []
    for (alpha, i), c in p.items():
        re, im = scalar_to_json(c)
        out.append({"alpha": list(alpha), "i": i + 1, "re": re, "im": im})
    return out


def _terms_from_json(terms):
    return {(tuple(t["alpha"]), t["i"] - 1): scalar_from_json(t.get("re", 0), t.get("im", 0))
            for t in terms}


class Jet:
    """Truncated formal series with homogeneous parts of degrees ``1..K``."""

    __slots__ = ("d", "K", "parts")

    def __init__(self, d, K, parts=()):
        self.d = int(d)
        self.K = int(K)
        if isinstance(parts, dict):
            parts = parts.values()
        self.parts = {}
        for p in parts:
            if p.d != self.d:
                raise ValueError("part dimension mismatch")
            if not 1 <= p.k <= self.K:
                raise ValueError(f"part of degree {p.k} outside 1..{self.K}")
            if p.k in self.parts:
                self.parts[p.k] = self.parts[p.k] + p
            else:
                self.parts[p.k] = p
        self.parts = {k: p for k, p in sorted(self.parts.items()) if not p.is_zero()}

    @classmethod
    def identity(cls, d, K):
        return cls.linear(np.eye(d, dtype=int), K)

    @classmethod
    def linear(cls, L, K=1):
        """Jet of the linear map ``z -> L z``."""
        L = np.asarray(L)
        d = L.shape[0]
        coeffs = {}
        for i in range(d):
            for j in range(d):
                c = L[i, j]
                if isinstance(c, (int, np.integer)):
                    c = mpq(int(c))
                if c != 0:
                    alpha = tuple(1 if t == j else 0 for t in range(d))
                    coeffs[(alpha, i)] = c
        return cls(d, K, [HomogeneousMap(d, 1, coeffs, check=False)])

    def part(self, k):
        if k > self.K:
            raise ValueError(f"degree {k} exceeds truncation {self.K}")
        return self.parts.get(k, HomogeneousMap.zero(self.d, k))

    def degree(self):
        return max(self.parts, default=0)

    def linear_matrix(self, mode=EXACT):
        """Matrix of the degree-1 part."""
        zero = mpq(0) if mode == EXACT else 0j
        M = np.full((self.d, self.d), zero, dtype=object if mode == EXACT else complex)
        for (alpha, i), c in self.part(1).coeffs.items():
            M[i, alpha.index(1)] = c
        return M

    def truncate(self, K):
        return Jet(self.d, K, [p for k, p in self.parts.items() if k <= K])

    def with_K(self, K):
        """Same polynomial with a different truncation label (parts above K dropped)."""
        return self.truncate(K)

    def zeroed(self, k):
        """Copy with the degree-k part removed."""
        return Jet(self.d, self.K, [p for kk, p in self.parts.items() if kk != k])

    def replace(self, p):
        """Copy with the degree ``p.k`` part replaced by ``p``."""
        return Jet(self.d, max(self.K, p.k), [q for kk, q in self.parts.items() if kk != p.k] + [p])

    def __add__(self, other):
        if self.d != other.d:
            raise ValueError("dimension mismatch")
        K = min(self.K, other.K)
        return Jet(self.d, K, [p for p in self.parts.values() if p.k <= K]
                   + [p for p in other.parts.values() if p.k <= K])

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, s):
        return Jet(self.d, self.K, [p.scale(s) for p in self.parts.values()])

    def map_parts(self, fn):
        return Jet(self.d, self.K, [fn(p) for p in self.parts.values()])

    def to_mode(self, mode):
        return self.map_parts(lambda p: p.to_mode(mode))

    def is_exact(self):
        return all(is_exact(c) for p in self.parts.values() for c in p.coeffs.values())

    def __eq__(self, other):
        if not isinstance(other, Jet):
            return NotImplemented
        return self.d == other.d and self.K == other.K and self.parts == other.parts

    __hash__ = None

    def __repr__(self):
        return f"Jet(d={self.d}, K={self.K}, degrees={sorted(self.parts)})"

    def to_json(self):
        return {"d": self.d, "K": self.K,
                "parts": [{"k": k, "terms": _terms_json(p)} for k, p in self.parts.items()]}

    @classmethod
    def from_json(cls, obj):
        d = obj["d"]
        return cls(d, obj["K"], [HomogeneousMap(d, part["k"], _terms_from_json(part["terms"]))
                                 for part in obj["parts"]])


# ---------------------------------------------------------------------------
# composition kernel


class _Packer:
    def __init__(self, d, K):
        self.d = d
        self.B = K + 1
        self.units = [self.B ** j for j in range(d)]

    def pack(self, alpha):
        return sum(a * u for a, u in zip(alpha, self.units))

    def unpack(self, key):
        out = []
        for _ in range(self.d):
            key, r = divmod(key, self.B)
            out.append(r)
        return tuple(out)


def _graded_mul(a, b, K):
    """Product of graded polynomials ``{deg: {key: c}}`` truncated at degree K."""
    out = {}
    for da, pa in a.items():
        for db, pb in b.items():
            deg = da + db
            if deg > K:
                continue
            acc = out.setdefault(deg, {})
            for ka, ca in pa.items():
                for kb, cb in pb.items():
                    key = ka + kb
                    v = ca * cb
                    if key in acc:
                        acc[key] += v
                    else:
                        acc[key] = v
    return out


def _components(f, packer, K):
    comps = [dict() for _ in range(f.d)]
    for k, p in f.parts.items():
        if k > K:
            continue
        for (alpha, i), c in p.coeffs.items():
            comps[i].setdefault(k, {})[packer.pack(alpha)] = c
    return comps


class _PowerTable:
    """Memoized truncated products ``P(alpha) = prod_j f_j**alpha_j``."""

    def __init__(self, f, K):
        self.K = K
        self.packer = _Packer(f.d, K)
        self.comps = _components(f, self.packer, K)
        self.one = mpq(1) if f.is_exact() else 1.0
        self.memo = {}

    def get(self, alpha):
        if alpha in self.memo:
            return self.memo[alpha]
        if sum(alpha) == 0:
            value = {0: {0: self.one}}
        else:
            j = next(t for t, a in enumerate(alpha) if a)
            prev = alpha[:j] + (alpha[j] - 1,) + alpha[j + 1:]
            value = _graded_mul(self.get(prev), self.comps[j], self.K)
        self.memo[alpha] = value
        return value


def _collect(d, K, packer, acc):
    parts = []
    for k in range(1, K + 1):
        coeffs = {}
        for i in range(d):
            for key, c in acc[i].get(k, {}).items():
                if c != 0:
                    coeffs[(packer.unpack(key), i)] = c
        if coeffs:
            parts.append(HomogeneousMap(d, k, coeffs, check=False))
    return Jet(d, K, parts)


def compose_jets(h, f, K=None):
    """Truncated composition ``h o f`` through degree K.

    Degree-k output only uses parts of ``h`` and ``f`` of degree at most k.
    """
    if h.d != f.d:
        raise ValueError("dimension mismatch")
    if K is None:
        K = min(h.K, f.K)
    table = _PowerTable(f, K)
    acc = [dict() for _ in range(h.d)]
    for k, p in h.parts.items():
        if k > K:
            continue
        for (alpha, i), c in p.coeffs.items():
            for deg, poly in table.get(alpha).items():
                target = acc[i].setdefault(deg, {})
                for key, v in poly.items():
                    w = c * v
                    if key in target:
                        target[key] += w
                    else:
                        target[key] = w
    return _collect(h.d, K, table.packer, acc)


def compose_poly(h, f):
    """Untruncated composition of polynomial jets."""
    K = max(1, h.degree()) * max(1, f.degree())
    return compose_jets(h.with_K(max(h.K, K)), f.with_K(max(f.K, K)), K)


def right_linear(p, M):
    """``p o M`` for a homogeneous map ``p`` and a matrix ``M``."""
    return compose_jets(Jet(p.d, p.k, [p]), Jet.linear(M, p.k), p.k).part(p.k)


def left_linear(M, p):
    """``M p`` for a matrix ``M`` and a homogeneous map ``p``."""
    d = p.d
    out = {}
    for (alpha, j), c in p.coeffs.items():
        for i in range(d):
            m = M[i, j]
            if m != 0:
                key = (alpha, i)
                out[key] = out[key] + m * c if key in out else m * c
    return HomogeneousMap(d, p.k, out, check=False)


def homogeneous_part(j, k):
    """Degree-k part of a jet (the zero map when absent)."""
    return j.part(k)


# ---------------------------------------------------------------------------
# evaluation


def _terms_list(p):
    if isinstance(p, Jet):
        items = [(a, i, c) for part in p.parts.values() for (a, i), c in part.coeffs.items()]
    else:
        items = [(a, i, c) for (a, i), c in p.coeffs.items()]
    return items


def evaluate(p, z):
    """Evaluate a homogeneous map or jet at a point or at an array of points.

    ``z`` is a vector of length d, or an array whose last axis has length d.
    Exact inputs (object dtype, rational entries) give exact outputs. Float
    evaluation is grouped by variable: the powers ``z_j**e`` are tabulated
    once and every monomial is a product of table lookups.
    """
    items = _terms_list(p)
    if isinstance(z, (list, tuple)) and z and all(is_exact(x) for x in z):
        z = np.array(list(z), dtype=object)
    z = np.asarray(z)
    if z.shape[-1] != p.d:
        raise ValueError("dimension mismatch")
    if z.dtype == object:
        return _evaluate_exact(items, p.d, z)
    z = z.astype(complex)
    if not items:
        return np.zeros_like(z)
    top = max(max(a) for a, _, _ in items)
    with np.errstate(all="ignore"):
        zs = np.moveaxis(z, -1, 0)
        table = []
        for j in range(p.d):
            row = [np.ones(z.shape[:-1], dtype=complex)]
            for _ in range(top):
                row.append(row[-1] * zs[j])
            table.append(row)
        out = np.zeros((p.d,) + z.shape[:-1], dtype=complex)
        for alpha, i, c in items:
            m = complex(c)
            for j, a in enumerate(alpha):
                if a:
                    m = m * table[j][a]
            out[i] = out[i] + m
    return np.moveaxis(out, 0, -1)


def _evaluate_exact(items, d, z):
    if z.ndim > 1:
        return np.array([_evaluate_exact(items, d, row) for row in z], dtype=object)
    out = [mpq(0)] * d
    for alpha, i, c in items:
        m = c
        for j, a in enumerate(alpha):
            if a:
                m = m * z[j] ** a
        out[i] = out[i] + m
    return np.array(out, dtype=object)


# ---------------------------------------------------------------------------
# norms and triangular structure


class NormSandwich:
    """Coefficient norm, sampled torus sup, and the binomial upper bound."""

    __slots__ = ("coeff_max", "sampled_sup", "upper_bound")

    def __init__(self, coeff_max, sampled_sup, upper_bound):
        self.coeff_max = coeff_max
        self.sampled_sup = sampled_sup
        self.upper_bound = upper_bound

    def __repr__(self):
        return (f"NormSandwich(coeff_max={self.coeff_max:.6g}, sampled_sup={self.sampled_sup:.6g}, "
                f"upper_bound={self.upper_bound:.6g})")

    def to_json(self):
        return {"coeff_max": self.coeff_max, "sampled_sup": self.sampled_sup,
                "upper_bound": self.upper_bound}


def torus_grid(d, n, max_points=2 ** 22):
    """Points ``(e^{i t_1}, ..., e^{i t_d})`` on a regular ``n**d`` grid."""
    if n < 1:
        raise ValueError("empty grid")
    if n ** d > max_points:
        raise SizeGuardError(f"torus grid {n}^{d} exceeds {max_points} points")
    roots = np.exp(2j * np.pi * np.arange(n) / n)
    mesh = np.meshgrid(*([roots] * d), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def norms(p, sampling=64, max_points=2 ** 22):
    """Norm sandwich ``coeff_max <= ... <= upper_bound`` of a homogeneous map.

    Parameters
    ----------
    p : HomogeneousMap
    sampling : int or ndarray
        Points per angle on the unit torus, or an explicit ``(n, d)`` array of
        sample points.

    Notes
    -----
    ``sampled_sup`` is a lower estimate of the sup norm over the unit polydisk
    (by the maximum principle the sup is attained on the torus).
    """
    pts = torus_grid(p.d, sampling, max_points) if np.isscalar(sampling) else np.asarray(sampling)
    if len(pts) == 0:
        raise ValueError("empty grid")
    cm = float(p.max_coeff())
    if p.is_zero():
        return NormSandwich(0.0, 0.0, 0.0)
    vals = evaluate(p.to_mode(FLOAT), pts)
    sup = float(np.max(np.abs(vals)))
    return NormSandwich(cm, sup, binom_count(p.k, p.d) * cm)


def triangularity(p):
    """Classify a homogeneous map or jet as strictly triangular, triangular or neither."""
    parts = p.parts.values() if isinstance(p, Jet) else [p]
    strict = True
    for q in parts:
        for (alpha, i) in q.coeffs:
            if any(alpha[i + 1:]):
                return NEITHER
            if alpha[i]:
                strict = False
    return STRICT if strict else TRIANGULAR


def project_T(p):
    """Split ``p = t + q`` with ``t`` strictly triangular and ``q`` free of such terms."""
    t = {key: c for key, c in p.coeffs.items() if in_T(*key)}
    q = {key: c for key, c in p.coeffs.items() if not in_T(*key)}
    return HomogeneousMap(p.d, p.k, t, check=False), HomogeneousMap(p.d, p.k, q, check=False)


@lru_cache(maxsize=None)
def T_positions(d, k):
    """Positions in :func:`basis` order of the strictly triangular indices."""
    return tuple(n for n, b in enumerate(basis(d, k)) if in_T(*b))


@lru_cache(maxsize=None)
def quotient_positions(d, k):
    return tuple(n for n, b in enumerate(basis(d, k)) if not in_T(*b))
