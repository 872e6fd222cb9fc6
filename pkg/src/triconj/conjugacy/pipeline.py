"""End-to-end runs: the basin chart and the switching counterexample."""
from dataclasses import dataclass, field
from math import log10

import numpy as np
from gmpy2 import mpq

from ..control import subexponential_test
from ..conjop import conjugacy_matrix
from ..errors import ConditionError, OrdViolation
from ..jets import HomogeneousMap, Jet, basis_position, quotient_positions
from ..sequences import EventuallyPeriodic
from ..triangular import iterate_bound_check
from .formal import formal_conjugate, homological_rhs, rescale
from .germ import germ_conjugate, residual_order
from .germs import GermSequence
from .ord import DEFAULT_THETAS, check_ord, select_m0


def choose_theta(lam, mu, m0, eps=0.05, iters=200):
    """Largest ``theta`` in ``(1, 1/lam)`` with ``theta^m0 lam^(m0+1) mu <= 1 - eps`` (bisection).

    ``theta lam <= 1 - eps`` is imposed as well so the rescaled linear parts
    still contract with margin.
    """
    base = lam ** (m0 + 1) * mu
    if base > 1 - eps:
        raise ConditionError(f"lam^(m0+1) mu = {base:.4g} leaves no room for theta > 1", condition="tpic")
    lo, hi = 1.0, 1.0 / lam
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid ** m0 * base <= 1 - eps and mid * lam <= 1 - eps:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass
class BasinReport:
    theta: float
    m0: int
    ord_report: object
    pair: object
    germ: object
    g_tilde: object
    h_tilde: list
    iterate: object
    stages: list = field(default_factory=list)

    def to_json(self):
        return {"theta": self.theta, "m0": self.m0, "ord": self.ord_report.to_json(),
                "slope": self.germ.slope, "sup_residual": self.germ.sup_residual,
                "r_grid": self.germ.r_grid, "C_coeff": self.iterate.C_coeff,
                "g_linear": self.pair.m0 == 1, "stages": self.stages}


def _stage(name, fn, stages):
    try:
        out = fn()
    except ConditionError as exc:
        exc.details["stage"] = name
        raise
    stages.append(name)
    return out


def basin_chart(f, K=4, r_grid=(0.1, 0.05, 0.025, 0.0125), horizon=30, theta_grid=DEFAULT_THETAS,
                eps=0.05, iterate_steps=40, samples=256):
    """Run ordering check, cutoff, rescaling, conjugacy and triangular iteration.

    The formal conjugacy is computed through degree ``m0`` and extended as a
    germ conjugacy through degree ``K``; rescaling by ``theta^n`` turns the
    subexponential normal form into one whose iterates obey the triangular
    contraction bound with rate ``theta lam``.
    """
    if not isinstance(f, GermSequence):
        f = GermSequence(f)
    stages = []
    lam, mu = f.decay.lam, f.decay.mu

    def ord_stage():
        rep = check_ord(f.diag_rule(), lam, theta_grid, horizon)
        if not rep.consistent:
            n, l, lhs = rep.witness
            raise OrdViolation("diagonal ordering condition fails", n=n, l=l, lhs=str(lhs))
        return rep

    rep = _stage("ord", ord_stage, stages)
    m0 = _stage("m0", lambda: select_m0(lam, mu), stages)
    theta = _stage("theta", lambda: choose_theta(lam, mu, m0, eps), stages)
    pair = _stage("formal", lambda: formal_conjugate(f, m0=m0, K=m0, horizon=horizon, check=False), stages)
    g_seq = GermSequence(pair.g_jets, f.decay)
    if f.kind == "eventually-periodic":
        germ = _stage("germ", lambda: germ_conjugate(f, g_seq, pair.h_rule, pair.m0, K, horizon, r_grid,
                                                     samples), stages)
    else:
        def series_germ():
            full = formal_conjugate(f, m0=m0, K=K, horizon=horizon, check=False)
            return residual_order(f, GermSequence(full.g_jets, f.decay), full.h_rule, K, horizon - 1,
                                  r_grid, samples)
        germ = _stage("germ", series_germ, stages)
    g_tilde = rescale(pair.g, theta)
    h_tilde = rescale(germ.h, theta, kind="conjugacy")
    iterate = _stage("iterate", lambda: iterate_bound_check(g_tilde, theta * lam, n_max=iterate_steps), stages)
    return BasinReport(theta=theta, m0=m0, ord_report=rep, pair=pair, germ=germ, g_tilde=g_tilde,
                       h_tilde=h_tilde, iterate=iterate, stages=stages)


# ---------------------------------------------------------------------------
# switching counterexample


ADD, MULTIPLY = "add", "multiply"


def switching_maps():
    """The two germs: ``(z1/4 - z2^2/4, z2/2)`` and ``(z1/2, z2/4 - z1^2/4)``."""
    q = mpq(1, 4)
    add = Jet.linear(np.array([[q, 0], [0, mpq(1, 2)]], dtype=object), 2) + \
        Jet(2, 2, [HomogeneousMap.monomial((0, 2), 0, -q)])
    mul = Jet.linear(np.array([[mpq(1, 2), 0], [0, q]], dtype=object), 2) + \
        Jet(2, 2, [HomogeneousMap.monomial((2, 0), 1, -q)])
    return {ADD: add, MULTIPLY: mul}


def block_kind(schedule, n):
    """``add`` before ``s_1`` and on ``[s_2k, s_2k+1)``; ``multiply`` on ``[s_2k+1, s_2k+2)``.

    Schedule entries are 0-based (``s_0 = schedule[0]``). The tail after the
    last switch continues the block type that would follow.
    """
    j = sum(1 for s in schedule if s <= n)
    return MULTIPLY if j >= 2 and j % 2 == 0 else ADD


def switching_sequence(schedule):
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be strictly increasing")
    maps = switching_maps()
    last = schedule[-1]
    pre = [maps[block_kind(schedule, n)] for n in range(last)]
    return GermSequence(EventuallyPeriodic([maps[block_kind(schedule, last)]], pre))


def default_u0_grid(n=20):
    """``n`` equally spaced rationals on ``[-2, 2]``."""
    return [mpq(-2) + mpq(4 * j, n - 1) for j in range(n)]


@dataclass
class CounterexampleReport:
    schedule: tuple
    u0_values: list
    sequences: list
    growth_ok: bool
    growth_checks: list
    subexp: list
    ord_report: object
    recursion_matches: bool

    @property
    def all_flagged(self):
        return all(not r.is_subexp_consistent for r in self.subexp)

    def to_json(self):
        return {"schedule": list(self.schedule), "u0": [str(u) for u in self.u0_values],
                "growth_ok": self.growth_ok, "all_flagged": self.all_flagged,
                "recursion_matches": self.recursion_matches,
                "ord": self.ord_report.to_json()}


def degree2_coefficients(seq, u0, n_max):
    """Exact ``z2^2 e1`` coefficient of ``h_n`` from the degree-2 homological recursion.

    ``h_0^2 = u0 z2^2 e1``; the quotient coordinates are propagated by
    ``A_n = A_{L_n^{-1}}`` plus the forcing and the strictly triangular
    coordinates are absorbed by the control.
    """
    d, k = 2, 2
    pos = basis_position(d, k)[((0, 2), 0)]
    Q = list(quotient_positions(d, k))
    e = HomogeneousMap.monomial((0, 2), 0, mpq(u0)).to_vector()
    u = e.copy()
    I1 = Jet.identity(d, 1)
    out = [u[pos]]
    for n in range(n_max):
        Linv = seq.Linv(n)
        A = conjugacy_matrix(Linv, k)
        b = homological_rhs(seq[n], Jet.linear(seq.L(n), 2), I1.with_K(2), I1.with_K(2), k, Linv).to_vector()
        nxt = A @ u + b
        u = np.zeros_like(nxt)
        u[Q] = nxt[Q]
        out.append(u[pos])
    return out


def scalar_recursion(schedule, u0, n_max):
    u = [mpq(u0)]
    for n in range(n_max):
        u.append(u[-1] + 1 if block_kind(schedule, n) == ADD else 8 * u[-1])
    return u


def counterexample_section4(schedule=(1, 3, 9, 27, 81), u0_values=None, horizon=None, ord_horizon=30):
    """Growth of the forced degree-2 coefficient under block switching.

    For every ``u0`` the coefficient is multiplied by ``8^(s_2k - s_2k-1)``
    across each multiply block, so ``|u_{s_2k}| >= 0.9 * 8^(s_2k - s_2k-1)``
    whenever the value entering the block has modulus at least 0.9. By
    default the horizon ends with a multiply block (the last one, or the
    multiply tail after the last switch). The sequences are then passed to :func:`subexponential_test` and the diagonal
    ordering check is run on the same germ sequence.
    """
    schedule = tuple(int(s) for s in schedule)
    u0_values = default_u0_grid() if u0_values is None else [mpq(u) for u in u0_values]
    if horizon is None:
        # end on a multiply block: the growth is what the sequence test should see
        last = schedule[-1]
        horizon = last if len(schedule) % 2 == 1 else last + last - schedule[-2]
    seq = switching_sequence(schedule)
    seqs, checks, tests = [], [], []
    matches = True
    for u0 in u0_values:
        u = degree2_coefficients(seq, u0, horizon)
        matches &= u == scalar_recursion(schedule, u0, horizon)
        for j in range(2, len(schedule), 2):
            s_even, s_odd = schedule[j], schedule[j - 1]
            if s_even > horizon:
                break
            lhs = abs(u[s_even])
            need = mpq(9, 10) * mpq(8) ** (s_even - s_odd)
            checks.append((u0, s_even, lhs >= need, float(log10(lhs)) if lhs else float("-inf")))
        seqs.append(u)
        tests.append(subexponential_test([abs(x) for x in u]))
    rep = check_ord(seq.diag_rule(), 0.5, horizon=ord_horizon)
    return CounterexampleReport(schedule=schedule, u0_values=u0_values, sequences=seqs,
                                growth_ok=all(c[2] for c in checks), growth_checks=checks,
                                subexp=tests, ord_report=rep, recursion_matches=bool(matches))


def tetration(k):
    """``10^^k`` (``10^^0 = 1``) for the small k where it is representable."""
    if k > 2:
        raise OverflowError("10^^k is not representable for k > 2")
    s = 1
    for _ in range(k):
        s = 10 ** s
    return s


def tetration_gap_log10(s):
    """``log10(8^s / 10^s) = -s log10(5/4)`` for the successor ``10^s`` of ``s``."""
    return -s * log10(1.25)
