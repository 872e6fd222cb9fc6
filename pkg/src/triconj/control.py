"""Subexponential solutions of ``u_{n+1} = A_n u_n + b_n``.

When the composites ``A_{n+l,n}^{-1}`` decay like ``C(theta) theta^n alpha^l``
the recursion has exactly one subexponential solution::

    u_n = - sum_{l >= 1} A_{n+l,n}^{-1} b_{n+l-1}

Two closures evaluate it. For eventually periodic data the solution is itself
eventually periodic and is found exactly by one linear solve against the
monodromy (``closure="periodic"``). For closed-form data the series is cut at
a certified length and summed by backward recursion from zero
(``closure="series"``); the result satisfies the recursion exactly and differs
from the true solution by at most the reported tail bound.
"""
from dataclasses import dataclass, field
from math import ceil, log

import numpy as np
from gmpy2 import mpq

from . import linalg
from .errors import CertificateError
from .scalars import EXACT, exact_abs
from .sequences import (EVENTUALLY_PERIODIC, EventuallyPeriodic, FiniteSequence, as_rule,
                        common_shape)

PERIODIC = "periodic"
SERIES = "series"
AUTO = "auto"


class CocycleRule:
    """Matrix sequence ``n -> A_n`` with cached inverses and composites.

    Parameters
    ----------
    forward : SequenceRule or list or callable
    inverse : optional rule for ``A_n^{-1}`` when it is known in closed form.
    """

    def __init__(self, forward, inverse=None):
        self.forward = as_rule(forward)
        if not self.forward.solvable:
            raise TypeError("cocycle rules must be closed-form or eventually periodic")
        self.inverse_rule = as_rule(inverse) if inverse is not None else None
        self._inv = {}

    @property
    def kind(self):
        return self.forward.kind

    @property
    def dim(self):
        return np.asarray(self.forward[0]).shape[0]

    def _key(self, n):
        return self.forward.index(n) if self.kind == EVENTUALLY_PERIODIC else n

    def A(self, n):
        return self.forward[n]

    __getitem__ = A

    def Ainv(self, n):
        key = self._key(n)
        if key not in self._inv:
            if self.inverse_rule is not None:
                self._inv[key] = self.inverse_rule[n]
            else:
                self._inv[key] = linalg.inv(self.forward[n])
        return self._inv[key]

    def composite(self, n, m):
        """``A_{n,m} = A_{n-1} ... A_m`` (identity when n == m)."""
        if n < m:
            raise ValueError("composite needs n >= m")
        out = linalg.eye(self.dim, linalg.mode_of(self.forward[0]))
        for j in range(m, n):
            out = self.A(j) @ out
        return out

    def composite_inverse(self, n, m):
        out = linalg.eye(self.dim, linalg.mode_of(self.forward[0]))
        for j in range(m, n):
            out = out @ self.Ainv(j)
        return out

    def restricted(self, rows):
        """Cocycle of the diagonal block on coordinates ``rows``."""
        ix = np.ix_(rows, rows)
        inv = self.inverse_rule.map(lambda M: np.asarray(M)[ix]) if self.inverse_rule else None
        return CocycleRule(self.forward.map(lambda M: np.asarray(M)[ix]), inv)


@dataclass
class DecayData:
    """Decay certificate ``||A_{n+l,n}^{-1}|| <= C(theta) theta^n alpha(theta)^l``.

    ``theta_table`` rows are ``(theta, C, alpha)``. ``lam``, ``mu`` and ``c`` are
    the forward and backward rates of the underlying linear cocycle.
    """

    c: float = 1.0
    lam: float = None
    mu: float = None
    theta_table: list = field(default_factory=list)
    rigorous: bool = True
    note: str = ""

    def rows(self):
        return [tuple(float(x) for x in row) for row in self.theta_table]

    def to_json(self):
        return {"c": self.c, "lambda": self.lam, "mu": self.mu,
                "theta_table": [list(r) for r in self.rows()],
                "rigorous": self.rigorous, "note": self.note}


@dataclass
class ControlSolution:
    u: list
    tail_lengths: list
    tail_bound: list
    residuals: list
    closure: str
    rigorous: bool
    rule: object = None
    row: tuple = None

    @property
    def horizon(self):
        return len(self.u) - 1


def estimate_decay(A, horizon, theta_grid=(1.05, 1.2, 1.5, 2.0)):
    """Empirical decay table from composites over ``n + l <= horizon``.

    The rate is taken from the longest windows, and ``C(theta)`` is the
    smallest constant that fits every window. Marked non-rigorous.
    """
    norms = {}
    for n in range(horizon):
        M = linalg.eye(A.dim, linalg.mode_of(A.A(0)))
        for l in range(1, horizon - n + 1):
            M = M @ A.Ainv(n + l - 1)
            norms[(n, l)] = linalg.norm_inf(M)
    H = horizon
    long = [norms[(n, l)] ** (1.0 / l) for (n, l) in norms if l >= max(1, H // 2)]
    rate = max(long) if long else 1.0
    rows = []
    for theta in theta_grid:
        alpha = rate * theta ** 0.25
        if alpha >= 1:
            continue
        C = max(v / (theta ** n * alpha ** l) for (n, l), v in norms.items())
        rows.append((theta, max(1.0, C), alpha))
    return DecayData(theta_table=rows, rigorous=False, note="fitted over horizon")


def _as_vector_rule(b):
    rule = as_rule(b)
    return rule.map(lambda v: np.asarray(v))


def _vec_zero(like):
    return linalg.zeros(len(like), linalg.mode_of(like))


def _monodromy_expanding(M):
    """True when every eigenvalue of ``M`` lies outside the closed unit disk."""
    if linalg.is_lower(M) or linalg.is_upper(M):
        return all(exact_abs(x) > 1 for x in linalg.diagonal(M))
    eig = np.linalg.eigvals(np.array(M.tolist(), dtype=complex))
    return bool(np.all(np.abs(eig) > 1 + 1e-12))


def _solve_periodic(A, b, horizon):
    p, q = common_shape(A.forward, b)
    P = p + q
    Mon = A.composite(p + q, p)
    r = _vec_zero(b[0])
    for j in range(p, p + q):
        r = A.A(j) @ r + b[j]
    if not _monodromy_expanding(Mon):
        raise CertificateError("monodromy has an eigenvalue in the closed unit disk: "
                               "no unique subexponential solution", condition="uno-rigidity")
    I = linalg.eye(len(r), linalg.mode_of(Mon))
    u = {p: linalg.solve(I - Mon, r)}
    for n in range(p, p + q - 1):
        u[n + 1] = A.A(n) @ u[n] + b[n]
    for n in range(p - 1, -1, -1):
        u[n] = A.Ainv(n) @ (u[n + 1] - b[n])
    rule = EventuallyPeriodic([u[p + j] for j in range(q)], [u[j] for j in range(p)])
    us = [rule[n] for n in range(horizon + 1)]
    return us, rule, P


def _row_for(decay, B, omega, tol):
    best = None
    for theta, C, alpha in decay.rows():
        if omega > theta or alpha * omega >= 1:
            continue
        # C B (alpha omega)^(L+1) / (omega (1 - alpha omega)) <= tol
        x = alpha * omega
        need = log(tol * omega * (1 - x) / (C * max(B, 1e-300))) / log(x) - 1
        L = max(1, ceil(need))
        if best is None or L < best[0]:
            best = (L, (theta, C, alpha))
    return best


def _b_bound(b, n_max):
    B = max((linalg.vec_max_abs(b[n]) for n in range(n_max)), default=0.0)
    return B, 1.0


def _solve_series(A, b, decay, horizon, tol, b_bound):
    if decay is None or not decay.rows():
        decay = estimate_decay(A, max(16, horizon))
    rigorous = decay.rigorous and b_bound is not None
    if b_bound is None:
        B, omega = _b_bound(b, 2 * horizon + 16)
    else:
        B, omega = b_bound
    if B == 0:
        zero = _vec_zero(b[0])
        return [zero] * (horizon + 1), [0] * (horizon + 1), [0.0] * (horizon + 1), decay, None, rigorous
    for _ in range(8):
        pick = _row_for(decay, B, max(omega, 1e-300), tol)
        if pick is None:
            raise CertificateError("no decay row with omega <= theta and alpha * omega < 1: "
                                   "series not certifiably convergent", condition="ssttmmaa",
                                   B=B, omega=omega, table=decay.rows())
        L, row = pick
        M = horizon + L
        if b_bound is not None:
            break
        B_new, _ = _b_bound(b, M + 1)
        if B_new <= B:
            break
        B = B_new
    theta, C, alpha = row
    x = alpha * omega
    u = _vec_zero(b[0])
    us = {}
    for n in range(M - 1, -1, -1):
        u = A.Ainv(n) @ (u - b[n])
        if n <= horizon:
            us[n] = u
    out = [us[n] for n in range(horizon + 1)]
    lengths = [M - n for n in range(horizon + 1)]
    tails = [C * B * theta ** n * omega ** (n - 1) * x ** (M - n + 1) / (1 - x) for n in range(horizon + 1)]
    return out, lengths, tails, decay, row, rigorous


def _residuals(A, b, us):
    return [linalg.vec_max_abs(us[n + 1] - A.A(n) @ us[n] - b[n]) for n in range(len(us) - 1)]


def solve_subexp(A, b, decay=None, horizon=30, tol=1e-12, closure=AUTO, b_bound=None):
    """Unique subexponential solution of ``u_{n+1} = A_n u_n + b_n``.

    Parameters
    ----------
    A : CocycleRule
    b : SequenceRule of vectors (or list for a periodic rule)
    decay : DecayData, optional
        Needed by the series closure; fitted empirically when missing.
    horizon : int
        ``u_0, ..., u_horizon`` are returned.
    closure : {"auto", "periodic", "series"}
        ``auto`` picks ``periodic`` when both ``A`` and ``b`` are eventually periodic.
    b_bound : (B, omega), optional
        Certified bound ``|b_n| <= B omega^n``; estimated when missing.

    Examples
    --------
    >>> sol = solve_subexp(CocycleRule([np.array([[mpq(2)]], dtype=object)]),
    ...                    [np.array([mpq(1)], dtype=object)], horizon=3)
    >>> [v[0] for v in sol.u]
    [mpq(-1,1), mpq(-1,1), mpq(-1,1), mpq(-1,1)]
    """
    if not isinstance(A, CocycleRule):
        A = CocycleRule(A)
    b = _as_vector_rule(b)
    if b.kind == "finite":
        raise TypeError("forcing must be closed-form or eventually periodic")
    periodic_ok = A.kind == EVENTUALLY_PERIODIC and b.kind == EVENTUALLY_PERIODIC
    if closure == AUTO:
        closure = PERIODIC if periodic_ok else SERIES
    if closure == PERIODIC:
        if not periodic_ok:
            raise TypeError("periodic closure needs eventually periodic A and b")
        us, rule, _ = _solve_periodic(A, b, horizon)
        res = _residuals(A, b, us)
        return ControlSolution(u=us, tail_lengths=[0] * len(us), tail_bound=[0.0] * len(us),
                               residuals=res, closure=PERIODIC, rigorous=True, rule=rule)
    if closure != SERIES:
        raise ValueError(f"unknown closure {closure!r}")
    us, lengths, tails, decay, row, rigorous = _solve_series(A, b, decay, horizon, tol, b_bound)
    res = _residuals(A, b, us)
    return ControlSolution(u=us, tail_lengths=lengths, tail_bound=tails, residuals=res,
                           closure=SERIES, rigorous=rigorous, rule=FiniteSequence(us), row=row)


def backward_series(A, b, M, horizon):
    """``u_n`` for ``n <= horizon`` from ``u_M = 0`` and ``u_n = A_n^{-1}(u_{n+1} - b_n)``.

    This is the series truncated at ``l <= M - n`` and solves the recursion exactly.
    """
    u = _vec_zero(b[0])
    out = {}
    for n in range(M - 1, -1, -1):
        u = A.Ainv(n) @ (u - b[n])
        if n <= horizon:
            out[n] = u
    return [out[n] for n in range(horizon + 1)]


def series_tail(row, B, omega, M, n):
    """Remainder bound at ``n`` of the series cut at ``l <= M - n``."""
    theta, C, alpha = row
    x = alpha * omega
    return C * B * theta ** n * omega ** (n - 1) * x ** (M - n + 1) / (1 - x)


def required_length(decay, B, omega, tol):
    """Shortest certified series length and the decay row that achieves it."""
    return _row_for(decay, B, omega, tol)


def truncated_series(A, b, n, L):
    """Direct evaluation of ``-sum_{l=1}^{L} A_{n+l,n}^{-1} b_{n+l-1}``."""
    b = _as_vector_rule(b)
    acc = _vec_zero(b[0])
    M = linalg.eye(A.dim, linalg.mode_of(A.A(0)))
    for l in range(1, L + 1):
        M = M @ A.Ainv(n + l - 1)
        acc = acc - M @ b[n + l - 1]
    return acc


def _V_indices(V, dim):
    if V == "full":
        return list(range(dim))
    return sorted(set(int(i) for i in V))


def check_invariant(A, V, horizon):
    """``A_n V = V``: the block mapping V into its complement vanishes."""
    Q = [i for i in range(A.dim) if i not in V]
    if A.kind == EVENTUALLY_PERIODIC:
        ns = range(A.forward.preperiod + A.forward.period)
    else:
        ns = range(horizon)
    for n in ns:
        M = np.asarray(A.A(n))
        if any(M[i, j] != 0 for i in Q for j in V):
            return False
    return True


def solve_with_control(A, b, V, decay=None, horizon=30, tol=1e-12, closure=AUTO, b_bound=None):
    """Solve ``u_{n+1} = A_n u_n + b_n + v_n`` with ``v_n`` in a coordinate subspace V.

    The quotient problem on the complementary coordinates is solved by
    :func:`solve_subexp`; the V-coordinates of ``u_n`` are set to zero and
    ``v_n`` is read off from the recursion.

    Parameters
    ----------
    V : iterable of int or "full"
        Coordinate indices spanning the control space.

    Returns
    -------
    (ControlSolution, list)
        The solution and ``v_0, ..., v_{horizon-1}``. For periodic closure
        ``solution.rule`` and the attribute ``v_rule`` on the solution
        describe the whole sequences.
    """
    if not isinstance(A, CocycleRule):
        A = CocycleRule(A)
    b = _as_vector_rule(b)
    dim = A.dim
    Vi = _V_indices(V, dim)
    if not check_invariant(A, Vi, horizon):
        raise CertificateError("control subspace is not invariant under A_n", condition="due-invariance")
    Q = [i for i in range(dim) if i not in Vi]
    mode = linalg.mode_of(b[0])

    def embed(uq):
        u = linalg.zeros(dim, mode)
        for j, i in enumerate(Q):
            u[i] = uq[j]
        return u

    if not Q:
        us = [linalg.zeros(dim, mode) for _ in range(horizon + 1)]
        sol = ControlSolution(u=us, tail_lengths=[0] * len(us), tail_bound=[0.0] * len(us),
                              residuals=[0.0] * horizon, closure=PERIODIC, rigorous=True)
        urule = b.map(lambda v: linalg.zeros(dim, mode))
    else:
        Aq = A.restricted(Q)
        bq = b.map(lambda v: np.asarray(v)[Q])
        sq = solve_subexp(Aq, bq, decay, horizon, tol, closure, b_bound)
        us = [embed(x) for x in sq.u]
        urule = sq.rule.map(embed) if sq.closure == PERIODIC else None
        sol = ControlSolution(u=us, tail_lengths=sq.tail_lengths, tail_bound=sq.tail_bound,
                              residuals=sq.residuals, closure=sq.closure, rigorous=sq.rigorous,
                              rule=urule if urule is not None else FiniteSequence(us), row=sq.row)

    def v_at(u_n, u_next, n):
        v = u_next - A.A(n) @ u_n - b[n]
        if mode != EXACT:
            v = v.copy()
            v[Q] = 0
        return v

    vs = [v_at(us[n], us[n + 1], n) for n in range(horizon)]
    if urule is not None and b.kind == EVENTUALLY_PERIODIC and A.kind == EVENTUALLY_PERIODIC:
        p, q = common_shape(A.forward, b, urule)
        sol.v_rule = EventuallyPeriodic([v_at(urule[p + j], urule[p + j + 1], p + j) for j in range(q)],
                                        [v_at(urule[j], urule[j + 1], j) for j in range(p)])
    else:
        sol.v_rule = FiniteSequence(vs)
    return sol, vs


# ---------------------------------------------------------------------------
# growth diagnostics


@dataclass
class SubexpReport:
    is_subexp_consistent: bool
    rate: float
    threshold: float
    n_points: int


def subexponential_test(values, horizon=None, theta_min=1.05, indices=None, poly_degree=4):
    """Check whether a sequence of norms is consistent with ``|u_n| <= B theta^n``.

    The growth rate is the least-squares slope of the running maximum of
    ``log|u_n|`` over the second half of the index range. The sequence is
    consistent when the rate is at most ``log(theta_min)`` plus a band
    ``2 * poly_degree * log(2) / N`` that absorbs polynomial growth.

    Parameters
    ----------
    values : sequence of nonnegative numbers
    indices : sequence of int, optional
        Indices ``n`` of the values when testing a subsequence.

    Examples
    --------
    >>> subexponential_test([2.0 ** n for n in range(40)]).is_subexp_consistent
    False
    """
    vals = [float(abs(v)) if not isinstance(v, float) else abs(v) for v in values]
    idx = list(range(len(vals))) if indices is None else list(indices)
    if horizon is not None:
        keep = [j for j, n in enumerate(idx) if n <= horizon]
        vals, idx = [vals[j] for j in keep], [idx[j] for j in keep]
    span = max(idx) - min(idx) if idx else 0
    if indices is None and span < 16:
        raise ValueError("need a horizon of at least 16")
    N = max(span, 1)
    threshold = log(theta_min) + 2 * poly_degree * log(2) / max(N, 16)
    logs = []
    env = -np.inf
    for v in vals:
        if v > 0:
            env = max(env, log(v))
        logs.append(env)
    if all(not np.isfinite(x) for x in logs):
        return SubexpReport(True, 0.0, threshold, len(vals))
    mid = min(idx) + span / 2
    sel = [j for j, n in enumerate(idx) if n >= mid and np.isfinite(logs[j])]
    if len(sel) < 2:
        sel = [j for j in range(len(idx)) if np.isfinite(logs[j])][-2:]
    if len(sel) < 2:
        return SubexpReport(True, 0.0, threshold, len(vals))
    x = np.array([idx[j] for j in sel], dtype=float)
    y = np.array([logs[j] for j in sel])
    rate = float(np.polyfit(x, y, 1)[0])
    return SubexpReport(rate <= threshold, rate, threshold, len(vals))


@dataclass
class Remark12Report:
    schedule: tuple
    u0_values: list
    trajectories: list
    halving_checks: list
    doubling_checks: list
    bound_ok: bool
    rates: list


def remark12_map(schedule):
    """``f_n``: halving for ``n < t_1`` and on ``[t_{2k}, t_{2k+1})``, ``u -> 2u - 1`` otherwise.

    ``schedule = (t_1, t_2, ...)``; beyond the last switch the last block type continues.
    """
    t = list(schedule)

    def kind(n):
        j = sum(1 for s in t if s <= n)
        return "halve" if j % 2 == 0 else "double"

    def f(n, u):
        return u / 2 if kind(n) == "halve" else 2 * u - 1

    return f, kind


def remark12_demo(schedule=(1, 2, 6, 24), u0_values=(0, mpq(1, 2), 1, 2, -1), n_max=None):
    """Iterate the switching affine example exactly and audit its growth.

    Checks, at every switch, the exact block factors: on a halving block
    ``u`` is multiplied by ``2^{-length}``, on a doubling block ``u - 1`` is
    multiplied by ``2^{length}``; and the a-priori bound ``|u_n| <= 2^n (|u_0| + 1)``.
    """
    t = list(schedule)
    if any(b <= a for a, b in zip(t, t[1:])) or t[0] < 1:
        raise ValueError("schedule must be strictly increasing and start at >= 1")
    n_max = n_max or t[-1]
    f, kind = remark12_map(t)
    trajs, halving, doubling, rates = [], [], [], []
    bound_ok = True
    for u0 in u0_values:
        u = [mpq(u0)]
        for n in range(n_max):
            u.append(f(n, u[-1]))
        trajs.append(u)
        bound_ok &= all(abs(u[n]) <= 2 ** n * (abs(u[0]) + 1) for n in range(n_max + 1))
        edges = [0] + [s for s in t if s <= n_max]
        for a, b in zip(edges, edges[1:]):
            if kind(a) == "halve":
                halving.append(u[b] == u[a] / mpq(2) ** (b - a))
            else:
                doubling.append(u[b] - 1 == (u[a] - 1) * 2 ** (b - a))
        rates.append(subexponential_test([abs(x) for x in u], indices=range(len(u))).rate
                     if n_max >= 16 else None)
    return Remark12Report(tuple(t), list(u0_values), trajs, halving, doubling, bound_ok, rates)
