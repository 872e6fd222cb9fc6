"""Special triangular polynomial automorphisms and their iteration.

A special triangular automorphism is ``g(z) = L z + p(z)`` with ``L`` lower
triangular and invertible and ``p`` strictly triangular (``p_j`` depends only
on ``z_1..z_{j-1}``) with ``p(0) = 0``, ``Dp(0) = 0``. Its degree profile
``k_1 = 1 <= k_2 <= ... <= k_d`` bounds the weighted degrees: substituting
``z_i -> z_i^{k_i}`` into ``p_j`` gives degree at most ``k_j``.
"""
import csv
from dataclasses import dataclass
from math import ceil, log

import numpy as np
from gmpy2 import mpq

from . import linalg
from .errors import HypothesisError, ProfileError
from .jets import (STRICT, HomogeneousMap, Jet, compose_jets, evaluate,
                   triangularity)
from .scalars import EXACT, FLOAT


def weighted_degree(poly, j, profile):
    """Degree of component ``j`` of ``poly`` after ``z_i -> z_i^{profile_i}``."""
    best = 0
    for part in poly.parts.values():
        for (alpha, i), c in part.coeffs.items():
            if i == j:
                best = max(best, sum(a * profile[t] for t, a in enumerate(alpha) if a))
    return best


def greedy_profile(poly, d):
    """Smallest nondecreasing profile with ``k_1 = 1`` compatible with ``poly``.

    Monotonicity makes the profile stable under composition with
    lower-triangular linear maps, which mix a component into later ones.
    """
    prof = [1]
    for j in range(1, d):
        prof.append(max(prof[-1], weighted_degree(poly, j, prof)))
    return tuple(prof)


class SpecialTriangularAuto:
    """``z -> L z + p(z)`` with lower-triangular ``L`` and strictly triangular ``p``.

    Parameters
    ----------
    linear : array_like
        Lower-triangular invertible matrix.
    poly : Jet, optional
        Polynomial part with parts of degree >= 2 only, strictly triangular.
    profile : tuple of int, optional
        Degree profile to validate against; computed greedily when omitted.
    """

    __slots__ = ("linear", "poly", "profile")

    def __init__(self, linear, poly=None, profile=None):
        L = np.asarray(linear)
        if L.dtype != object and not np.iscomplexobj(L):
            L = linalg.as_matrix(L.tolist())
        d = L.shape[0]
        if not linalg.is_lower(L) or any(L[i, i] == 0 for i in range(d)):
            raise ValueError("linear part must be lower triangular and invertible")
        if poly is None:
            poly = Jet(d, 2)
        if isinstance(poly, dict):
            poly = Jet(d, max(list(poly) + [2]), list(poly.values()))
        if 1 in poly.parts:
            raise ValueError("polynomial part must vanish to second order")
        if triangularity(poly) != STRICT:
            raise ValueError("polynomial part must be strictly triangular")
        self.linear = L
        self.poly = poly.truncate(max(2, poly.degree()))
        computed = greedy_profile(self.poly, d)
        if profile is None:
            profile = computed
        else:
            profile = tuple(profile)
            if profile[0] != 1 or any(weighted_degree(self.poly, j, profile) > profile[j] for j in range(d)):
                raise ProfileError(f"profile {profile} violated", profile=list(profile))
        self.profile = profile

    @property
    def d(self):
        return self.linear.shape[0]

    @property
    def degree(self):
        return max(1, self.poly.degree())

    @property
    def k(self):
        return max(self.profile)

    def as_jet(self, K=None):
        K = K or max(self.degree, 1)
        return Jet(self.d, K, [Jet.linear(self.linear).part(1)] + list(self.poly.parts.values()))

    @classmethod
    def from_jet(cls, j, profile=None):
        L = j.linear_matrix(EXACT if j.is_exact() else FLOAT)
        poly = Jet(j.d, max(2, j.K), [p for k, p in j.parts.items() if k >= 2])
        return cls(L, poly, profile)

    def __call__(self, z):
        return evaluate(self.as_jet(), z)

    def to_mode(self, mode):
        return SpecialTriangularAuto(linalg.to_mode(self.linear, mode), self.poly.to_mode(mode), self.profile)

    def __eq__(self, other):
        return (isinstance(other, SpecialTriangularAuto) and self.d == other.d
                and all(self.linear[i, j] == other.linear[i, j] for i in range(self.d) for j in range(self.d))
                and self.poly.truncate(max(self.degree, other.degree, 2)).parts
                == other.poly.truncate(max(self.degree, other.degree, 2)).parts)

    __hash__ = None

    def __repr__(self):
        return f"SpecialTriangularAuto(d={self.d}, profile={self.profile}, degree={self.degree})"

    def to_json(self):
        from .scalars import scalar_to_json
        return {"d": self.d, "profile": list(self.profile),
                "linear": [[list(scalar_to_json(x)) for x in row] for row in self.linear],
                "poly": self.poly.to_json()}

    @classmethod
    def from_json(cls, obj):
        from .scalars import parse_scalar
        L = np.array([[parse_scalar(x) for x in row] for row in obj["linear"]], dtype=object)
        if any(isinstance(x, complex) for x in L.ravel()):
            L = L.astype(complex)
        return cls(L, Jet.from_json(obj["poly"]), obj.get("profile"))


def _identity_like(g):
    return SpecialTriangularAuto(linalg.eye(g.d, linalg.mode_of(g.linear)), Jet(g.d, 2), (1,) * g.d)


def compose_special(g2, g1):
    """``g2 o g1`` computed as an exact, untruncated polynomial composition.

    The result is audited against the elementwise maximum of the input
    profiles and a :class:`ProfileError` is raised if it is exceeded.

    Examples
    --------
    >>> half = np.array([[mpq(1, 2), 0], [0, mpq(1, 2)]], dtype=object)
    >>> g = SpecialTriangularAuto(half, Jet(2, 2, [HomogeneousMap.monomial((2, 0), 1)]))
    >>> compose_special(g, g).poly.part(2).coeff((2, 0), 1)
    mpq(3,4)
    """
    if g1.d != g2.d:
        raise ValueError("dimension mismatch")
    bound = tuple(max(a, b) for a, b in zip(g1.profile, g2.profile))
    K = max(bound)
    wide = max(K, g2.degree * g1.degree)
    full = compose_jets(g2.as_jet(wide), g1.as_jet(wide), wide)
    if any(k > K for k in full.parts):
        raise ProfileError("composition exceeds the profile degree", profile=list(bound))
    L = full.linear_matrix(linalg.mode_of(g1.linear))
    poly = Jet(g1.d, max(2, K), [p for k, p in full.parts.items() if k >= 2])
    if triangularity(poly) != STRICT:
        raise ProfileError("composition lost strict triangularity", profile=list(bound))
    for j in range(g1.d):
        if weighted_degree(poly, j, bound) > bound[j]:
            raise ProfileError(f"component {j + 1} exceeds profile {bound}", profile=list(bound))
    return SpecialTriangularAuto(L, poly, bound)


def invert_special(g):
    """Exact inverse by forward substitution, component by component.

    Each inverse component has weighted degree at most ``k_j``, so truncating
    the substitution at ``max(profile)`` loses nothing.
    """
    d = g.d
    K = max(2, g.k)
    L = g.linear
    mode = linalg.mode_of(L)
    Linv = linalg.inv(L)
    one = mpq(1) if mode == EXACT else 1.0
    comps = []  # component j of the inverse as a Jet with only component j filled
    solved = Jet(d, K)
    for j in range(d):
        # w_j - sum_{i<j} L_ji z_i(w) - p_j(z(w)), then divide by L_jj
        ej = tuple(1 if t == j else 0 for t in range(d))
        acc = Jet(d, K, [HomogeneousMap(d, 1, {(ej, j): one}, check=False)])
        for i in range(j):
            if L[j, i] != 0:
                acc = acc - _move(comps[i], i, j).scale(L[j, i])
        pj = _component(g.poly, j)
        if pj.parts:
            sub = compose_jets(pj, solved, K)
            acc = acc - sub
        zj = acc.scale(1 / L[j, j])
        comps.append(zj)
        solved = solved + zj
    poly = Jet(d, K, [p for k, p in solved.parts.items() if k >= 2])
    return SpecialTriangularAuto(Linv, poly, g.profile)


def _component(j, i):
    return Jet(j.d, j.K, [HomogeneousMap(j.d, p.k, {key: c for key, c in p.coeffs.items() if key[1] == i},
                                         check=False) for p in j.parts.values()])


def _move(j, src, dst):
    """Jet whose component ``dst`` is component ``src`` of ``j`` (others zero)."""
    return Jet(j.d, j.K, [HomogeneousMap(j.d, p.k, {(a, dst): c for (a, i), c in p.coeffs.items() if i == src},
                                         check=False) for p in j.parts.values()])


# ---------------------------------------------------------------------------
# numerical iteration


class _FastEval:
    """Vectorized float evaluator of one automorphism."""

    def __init__(self, g):
        g = g.to_mode(FLOAT) if linalg.mode_of(g.linear) == EXACT or g.poly.is_exact() else g
        self.L = np.asarray(g.linear, dtype=complex)
        terms = [(alpha, i, complex(c)) for p in g.poly.parts.values() for (alpha, i), c in p.coeffs.items()]
        self.d = g.d
        if terms:
            self.E = np.array([t[0] for t in terms], dtype=float)
            self.comp = np.array([t[1] for t in terms])
            self.coef = np.array([t[2] for t in terms])
        else:
            self.E = None

    def __call__(self, Z):
        out = Z @ self.L.T
        if self.E is not None:
            with np.errstate(all="ignore"):
                mon = np.prod(Z[:, None, :] ** self.E[None, :, :], axis=2) * self.coef[None, :]
            for i in range(self.d):
                mask = self.comp == i
                if mask.any():
                    out[:, i] += mon[:, mask].sum(axis=1)
        return out


def _evaluators(g_rule, n_max):
    from .sequences import EVENTUALLY_PERIODIC
    cache = {}

    def get(n):
        key = g_rule.index(n) if g_rule.kind == EVENTUALLY_PERIODIC else n
        if key not in cache:
            cache[key] = _FastEval(g_rule[n])
        return cache[key]
    return get


@dataclass
class Orbit:
    trajectory: np.ndarray
    entered: int
    diverged: bool


def orbit(g_rule, z0, n_max, attract=1e-8, diverge=1e150):
    """Iterate ``z_{n+1} = g_n(z_n)`` in double precision.

    Returns the trajectory, the first ``n`` with ``max|z_n| < attract`` (or -1)
    and whether the orbit exceeded ``diverge``.
    """
    from .sequences import as_rule
    g_rule = as_rule(g_rule)
    get = _evaluators(g_rule, n_max)
    z = np.asarray(z0, dtype=complex)[None, :]
    traj = [z[0].copy()]
    entered, diverged = -1, False
    if np.max(np.abs(z)) < attract:
        entered = 0
    for n in range(n_max):
        z = get(n)(z)
        traj.append(z[0].copy())
        m = np.max(np.abs(z))
        if not np.isfinite(m) or m > diverge:
            diverged = True
            break
        if entered < 0 and m < attract:
            entered = n + 1
    return Orbit(np.array(traj), entered, diverged)


def iterate_points(g_rule, points, n_max, attract=1e-8, diverge=1e150):
    """Steps to enter the ``attract`` ball for many points (-1 if never)."""
    from .sequences import as_rule
    g_rule = as_rule(g_rule)
    get = _evaluators(g_rule, n_max)
    Z = np.array(points, dtype=complex)
    steps = np.full(len(Z), -1)
    norms0 = np.max(np.abs(Z), axis=1)
    steps[norms0 < attract] = 0
    diverged = np.zeros(len(Z), dtype=bool)
    for n in range(n_max):
        Z = get(n)(Z)
        m = np.max(np.abs(Z), axis=1)
        bad = ~np.isfinite(m) | (m > diverge)
        diverged |= bad
        Z[bad] = 0
        newly = (steps < 0) & (m < attract) & ~diverged
        steps[newly] = n + 1
        if np.all((steps >= 0) | diverged):
            break
    return steps, np.max(np.abs(Z), axis=1), diverged


@dataclass
class IterateReport:
    lam: float
    k: int
    C_coeff: float
    C_sampled: float
    bounded: bool
    c_linear: float
    coeff_sequence: list
    step_bounds: list = None
    steps: list = None
    all_entered: bool = None


def step_bound(C, lam, z_norm, k, attract=1e-8):
    """Steps after which ``C lam^n (|z| + |z|^k) < attract``."""
    s = z_norm + z_norm ** k
    if s == 0:
        return 0
    return max(0, ceil((log(C) + log(s) - log(attract)) / (-log(lam))))


def iterate_bound_check(g_rule, lam, points=None, n_max=40, c=None, attract=1e-8, slack=10):
    """Audit ``|g_{n,0}(z)| <= C lam^n (|z| + |z|^k)`` on a horizon.

    ``g_{n,0} = g_{n-1} o ... o g_0`` is composed exactly; ``C_coeff`` is the
    largest ``lam^{-n} max_i sum_alpha |coefficient|`` seen, which bounds the
    left side for every z on the horizon. ``C_sampled`` is the smallest
    constant fitting the sample points. When ``c`` is given, the linear decay
    ``||L_{n,m}|| <= c lam^{n-m}`` is also checked.
    """
    from .sequences import as_rule
    g_rule = as_rule(g_rule)
    d = g_rule[0].d
    k = max(g_rule[n].k for n in range(n_max))
    G = _identity_like(g_rule[0])
    coeffs = []
    for n in range(1, n_max + 1):
        G = compose_special(g_rule[n - 1], G)
        jet = G.as_jet()
        rows = [0.0] * d
        for p in jet.parts.values():
            for (alpha, i), cc in p.coeffs.items():
                rows[i] += float(abs(cc))
        coeffs.append(max(rows) / lam ** n)
    C_coeff = max([1.0] + coeffs)
    q = max(1, n_max // 4)
    bounded = max(coeffs[-q:]) <= 1.05 * max(coeffs[-2 * q:-q]) + 1e-300 if n_max >= 8 else True
    # linear decay hypothesis
    c_lin = 0.0
    for m in range(n_max):
        M = linalg.eye(d, linalg.mode_of(g_rule[m].linear))
        for n in range(m + 1, n_max + 1):
            M = np.asarray(g_rule[n - 1].linear) @ M
            c_lin = max(c_lin, linalg.norm_inf(M) / lam ** (n - m))
    if c is not None and c_lin > c * (1 + 1e-9):
        raise HypothesisError(f"linear decay fails: ||L_(n,m)|| / lam^(n-m) reaches {c_lin:.4g} > c = {c}",
                              condition="triang-a")
    if not bounded:
        raise HypothesisError("coefficients of lam^-n g_(n,0) keep growing", condition="limitato")
    report = IterateReport(lam=lam, k=k, C_coeff=C_coeff, C_sampled=0.0, bounded=bounded,
                           c_linear=c_lin, coeff_sequence=coeffs)
    if points is not None:
        Z = np.array(points, dtype=complex)
        norms0 = np.max(np.abs(Z), axis=1)
        scale = norms0 + norms0 ** k
        get = _evaluators(g_rule, n_max)
        W = Z.copy()
        Cs = 0.0
        for n in range(1, n_max + 1):
            W = get(n - 1)(W)
            with np.errstate(all="ignore"):
                ratio = np.max(np.abs(W), axis=1) / (lam ** n * np.where(scale > 0, scale, 1))
            Cs = max(Cs, float(np.nanmax(ratio)))
        report.C_sampled = Cs
        bounds = [step_bound(C_coeff, lam, float(r), k, attract) for r in norms0]
        steps, _, diverged = iterate_points(g_rule, Z, max(bounds) + slack + 1, attract)
        report.step_bounds = bounds
        report.steps = steps.tolist()
        report.all_entered = bool(np.all((steps >= 0) & (steps <= np.array(bounds) + slack)) and not diverged.any())
    return report


def basin_sample(g_rule, points, n_max, path=None, attract=1e-8, diverge=1e150):
    """Escape-time table for sample points; optionally written as CSV."""
    steps, final, diverged = iterate_points(g_rule, points, n_max, attract, diverge)
    Z = np.array(points, dtype=complex)
    rows = []
    for z, s, f, dv in zip(Z, steps, final, diverged):
        row = {}
        for j, x in enumerate(z):
            row[f"z{j + 1}_re"] = x.real
            row[f"z{j + 1}_im"] = x.imag
        row["steps"] = int(s)
        row["final_norm"] = float("inf") if dv else float(f)
        rows.append(row)
    if path is not None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    return rows
