"""Degree-by-degree formal conjugacy to a triangular normal form.

For each degree k the unknown parts ``h_n^k`` and ``g_n^k`` satisfy::

    h_{n+1}^k = A_{L_n^{-1}} h_n^k + g_n^k o L_n^{-1} + b_n^k
    b_n^k = [(g^_n o h^_n)^k - (h^_{n+1} o f_n)^k] o L_n^{-1}

where hats drop the (unknown) degree-k parts. For ``k <= m0`` the control
``g_n^k o L_n^{-1}`` ranges over the strictly triangular maps; above ``m0`` the
control is zero and ``h^k`` is the unique subexponential solution.
"""
from math import e, gcd

import numpy as np

from .. import linalg
from ..control import (PERIODIC, SERIES, CocycleRule, DecayData,
                       backward_series, required_length, series_tail,
                       solve_subexp, solve_with_control)
from ..conjop import conjugacy_matrix
from ..errors import CertificateError, OrdViolation
from ..jets import (HomogeneousMap, Jet, T_positions, binom_count,
                    compose_jets, right_linear)
from ..scalars import EXACT
from ..sequences import (EVENTUALLY_PERIODIC, ClosedForm, EventuallyPeriodic,
                         FiniteSequence, as_rule)
from ..triangular import SpecialTriangularAuto
from .germs import ConjugacyPair, GermSequence
from .ord import DEFAULT_THETAS, check_ord, select_m0


def homological_rhs(f_n, g_hat, h_hat, h_hat_next, k, Linv):
    """``b_n^k`` from lower-degree data (degree-k parts of the hats must be absent)."""
    Y = compose_jets(g_hat, h_hat, k).part(k)
    X = compose_jets(h_hat_next, f_n.truncate(min(k, f_n.K)).with_K(k), k).part(k)
    return right_linear(Y - X, Linv)


def _jet(parts, d, K):
    return Jet(d, K, [p for kk, p in parts.items() if kk <= K])


def degree_decay(f, k, m0, ord_report=None, theta_grid=DEFAULT_THETAS):
    """Decay rows for the degree-k homological cocycle ``A_n^{-1} = A_{L_n}``.

    Above ``m0`` the coefficient-norm estimate
    ``||A_M||  <= c(k,d) ||M||^k ||M^{-1}||`` gives ``C = c(k,d) c^(k+1)`` and
    ``alpha = lam^k mu``. At or below ``m0`` the quotient rows follow the
    partition estimate with the explicit constant ``K_k`` and the fitted
    ordering constants, and are marked non-rigorous.
    """
    dd = f.decay
    d = f.d
    ck = binom_count(k, d)
    if k > m0:
        alpha = dd.lam ** k * dd.mu
        rows = [(t, ck * dd.c ** (k + 1), alpha) for t in theta_grid] if alpha < 1 else []
        return DecayData(c=dd.c, lam=dd.lam, mu=dd.mu, theta_table=rows, rigorous=dd.rigorous,
                         note=f"coefficient norm, degree {k}")
    N = (k + 1) * (d - 1)
    rho = dd.c ** 2 * dd.lam * dd.mu + 1
    Kk = e ** (k + 1) * rho ** N * ck ** (N + 1)
    rows = []
    for t in theta_grid:
        C_ord = ord_report.C.get(t) if ord_report is not None else 1.0
        beta = t ** (N + 1) * dd.lam
        if C_ord is None or beta >= 1:
            continue
        alpha = beta ** 0.5
        Ct = max(l ** N * (beta / alpha) ** l for l in range(1, 2000))
        rows.append((t ** (N + 1), max(1.0, Kk * C_ord ** (N + 1) * Ct), alpha))
    return DecayData(c=dd.c, lam=dd.lam, mu=dd.mu, theta_table=rows, rigorous=False,
                     note=f"quotient partition estimate, degree {k}")


def _mats(f, k, n):
    return conjugacy_matrix(f.Linv(n), k), conjugacy_matrix(f.L(n), k)


def _formal_periodic(f, m0, K):
    rule = f.rule
    d, mode = f.d, f.mode
    p, q = rule.preperiod, rule.period
    P = p + q
    nxt = [rule.index(n + 1) for n in range(P)]
    ident = Jet.identity(d, 1).to_mode(mode).part(1)
    h = [{1: ident} for _ in range(P)]
    g = [{1: f[n].part(1)} for n in range(P)]
    sols = {}
    for k in range(2, K + 1):
        b = []
        for n in range(P):
            rhs = homological_rhs(f[n], _jet(g[n], d, k), _jet(h[n], d, k), _jet(h[nxt[n]], d, k),
                                  k, f.Linv(n))
            b.append(rhs.to_vector(mode))
        mats = [_mats(f, k, n) for n in range(P)]
        A = CocycleRule(EventuallyPeriodic([m[0] for m in mats[p:]], [m[0] for m in mats[:p]]),
                        EventuallyPeriodic([m[1] for m in mats[p:]], [m[1] for m in mats[:p]]))
        brule = EventuallyPeriodic(b[p:], b[:p])
        if k <= m0:
            sol, _ = solve_with_control(A, brule, T_positions(d, k), horizon=P, closure=PERIODIC)
            for n in range(P):
                h[n][k] = HomogeneousMap.from_vector(d, k, sol.rule[n])
                v = HomogeneousMap.from_vector(d, k, sol.v_rule[n])
                g[n][k] = right_linear(v, f.L(n))
        else:
            sol = solve_subexp(A, brule, horizon=P, closure=PERIODIC)
            for n in range(P):
                h[n][k] = HomogeneousMap.from_vector(d, k, sol.rule[n])
        sols[k] = sol
    h_rule = EventuallyPeriodic([_jet(h[n], d, K) for n in range(p, P)], [_jet(h[n], d, K) for n in range(p)])
    g_jets = [_jet(g[n], d, K) for n in range(P)]
    g_rule = EventuallyPeriodic([_as_auto(j, f.L(n), m0) for n, j in enumerate(g_jets)][p:],
                                [_as_auto(j, f.L(n), m0) for n, j in enumerate(g_jets)][:p])
    gj_rule = EventuallyPeriodic(g_jets[p:], g_jets[:p])
    return h_rule, g_rule, gj_rule, sols, {}


def _as_auto(jet, L, m0):
    poly = Jet(jet.d, max(2, m0), [p for k, p in jet.parts.items() if 2 <= k])
    return SpecialTriangularAuto(L, poly)


def _formal_series(f, m0, K, horizon, tol, ord_report, theta_grid):
    """Closed-form route: certified truncated series, horizons chosen top-down."""
    d, mode = f.d, f.mode
    decays = {k: degree_decay(f, k, m0, ord_report, theta_grid) for k in range(2, K + 1)}
    L_guess = {}
    for k in range(2, K + 1):
        pick = required_length(decays[k], 1.0, 1.0, tol)
        if pick is None:
            raise CertificateError(f"no usable decay row at degree {k}", condition="ssttmmaa", degree=k)
        L_guess[k] = pick[0] + 4
    for _attempt in range(6):
        H = {K: horizon}
        for k in range(K, 2, -1):
            H[k - 1] = H[k] + L_guess[k] + 1
        top = H[2] + L_guess[2] + 1
        ident = Jet.identity(d, 1).to_mode(mode).part(1)
        h = [{1: ident} for _ in range(top + 1)]
        g = [{1: f[n].part(1)} for n in range(top + 1)]
        tails, retry = {}, False
        for k in range(2, K + 1):
            M = H[k] + L_guess[k]

            def b_at(n, k=k):
                return homological_rhs(f[n], _jet(g[n], d, k), _jet(h[n], d, k), _jet(h[n + 1], d, k),
                                       k, f.Linv(n)).to_vector(mode)

            brule = ClosedForm(b_at)
            A = CocycleRule(ClosedForm(lambda n, k=k: conjugacy_matrix(f.Linv(n), k)),
                            ClosedForm(lambda n, k=k: conjugacy_matrix(f.L(n), k)))
            if k <= m0:
                Q = [i for i in range(A.dim) if i not in set(T_positions(d, k))]
                Aq = A.restricted(Q)
                bq = brule.map(lambda v: np.asarray(v)[Q])
                B = max(linalg.vec_max_abs(bq[n]) for n in range(M))
                uq = backward_series(Aq, bq, M, H[k]) if Q else []
                us = []
                for n in range(H[k] + 1):
                    u = linalg.zeros(A.dim, mode)
                    for j, i in enumerate(Q):
                        u[i] = uq[n][j]
                    us.append(u)
            else:
                B = max(linalg.vec_max_abs(brule[n]) for n in range(M))
                us = backward_series(A, brule, M, H[k])
            pick = required_length(decays[k], max(B, 1e-300), 1.0, tol)
            if pick is None:
                raise CertificateError(f"no usable decay row at degree {k}", condition="ssttmmaa", degree=k)
            if pick[0] > L_guess[k]:
                L_guess[k] = pick[0] + 4
                retry = True
                break
            tails[k] = [series_tail(pick[1], B, 1.0, M, n) for n in range(H[k] + 1)]
            for n in range(H[k] + 1):
                h[n][k] = HomogeneousMap.from_vector(d, k, us[n])
            if k <= m0:
                for n in range(H[k]):
                    v = us[n + 1] - A.A(n) @ us[n] - brule[n]
                    if mode != EXACT:
                        v = v.copy()
                        v[Q] = 0
                    g[n][k] = right_linear(HomogeneousMap.from_vector(d, k, v), f.L(n))
        if not retry:
            break
    else:
        raise CertificateError("series lengths did not stabilize", condition="ssttmmaa")
    h_list = [_jet(h[n], d, K) for n in range(horizon + 1)]
    g_jets = [_jet(g[n], d, K) for n in range(horizon)]
    g_list = [_as_auto(j, f.L(n), m0) for n, j in enumerate(g_jets)]
    return FiniteSequence(h_list), FiniteSequence(g_list), FiniteSequence(g_jets), decays, tails


def residual_report(f, g_jets, h_rule, N, K):
    """Coefficient norms of the degree-k parts of ``h_{n+1} o f_n - g_n o h_n``.

    Values are exact scalars in exact mode (equal to 0 for a true conjugacy).
    Terms that are shared between periodic indices are computed once.
    """
    rule = f.rule
    cache = {}
    report = {}
    for n in range(N):
        key = (rule.index(n), rule.index(n + 1)) if rule.kind == EVENTUALLY_PERIODIC else n
        if key not in cache:
            lhs = compose_jets(h_rule[n + 1], f[n].with_K(max(K, f.K)), K)
            rhs = compose_jets(g_jets[n].with_K(K), h_rule[n], K)
            diff = lhs - rhs
            cache[key] = {k: diff.part(k).max_coeff() for k in range(1, K + 1)}
        for k, v in cache[key].items():
            report[(n, k)] = v
    return report


def formal_conjugate(f, m0=None, K=None, horizon=30, tol=1e-12, check=True,
                     theta_grid=DEFAULT_THETAS, ord_horizon=40):
    """Formal conjugacy ``h_{n+1} o f_n = g_n o h_n`` through degree K.

    Parameters
    ----------
    f : GermSequence
        Eventually periodic rules are solved exactly by periodic closure;
        closed-form rules use the certified truncated series.
    m0 : int, optional
        Degree cutoff; defaults to the smallest with ``lam^(m0+1) mu < 1``.
    check : bool
        Run the diagonal ordering check first and raise on violation.

    Returns
    -------
    ConjugacyPair
        ``g_n^1 = L_n``, ``h_n^1 = I``, ``g_n^k`` strictly triangular for
        ``2 <= k <= m0`` and zero above.
    """
    if not isinstance(f, GermSequence):
        f = GermSequence(f)
    if not f.rule.solvable:
        raise TypeError("germ rules must be closed-form or eventually periodic")
    K = K or f.K
    lam, mu = f.decay.lam, f.decay.mu
    if m0 is None:
        m0 = select_m0(lam, mu)
    elif lam ** (m0 + 1) * mu >= 1:
        raise CertificateError(f"lam^(m0+1) mu = {lam ** (m0 + 1) * mu:.4g} >= 1", condition="lambdamu-violation")
    report = None
    if check:
        report = check_ord(f.diag_rule(), lam, theta_grid, ord_horizon)
        if not report.consistent:
            n, l, lhs = report.witness
            raise OrdViolation("diagonal ordering condition fails", n=n, l=l, lhs=str(lhs))
    if f.kind == EVENTUALLY_PERIODIC:
        h_rule, g_rule, gj_rule, sols, tails = _formal_periodic(f, m0, K)
        closure = PERIODIC
    else:
        h_rule, g_rule, gj_rule, sols, tails = _formal_series(f, m0, K, horizon, tol, report, theta_grid)
        closure = SERIES
    res = residual_report(f, gj_rule, h_rule, horizon, K)
    h_list = [h_rule[n] for n in range(horizon + 1)]
    return ConjugacyPair(g=g_rule, h=h_list, m0=m0, K=K, residual_report=res, h_rule=h_rule,
                         g_jets=gj_rule, closure=closure, tail_bounds=tails, solutions=sols)


def normal_form_violations(f, pair, N=None):
    """List of shape violations of a conjugacy pair (empty when the shape holds)."""
    from ..jets import STRICT, triangularity
    N = pair.horizon if N is None else N
    out = []
    d = f.d
    ident = Jet.identity(d, 1).to_mode(f.mode).part(1)
    for n in range(N):
        gj = pair.g_jets[n]
        if gj.part(1) != f[n].part(1):
            out.append((n, 1, "g^1 != L_n"))
        if pair.h[n].part(1) != ident:
            out.append((n, 1, "h^1 != I"))
        for k in range(2, pair.K + 1):
            gk = gj.part(k)
            if k <= pair.m0 and not gk.is_zero() and triangularity(gk) != STRICT:
                out.append((n, k, "g^k not strictly triangular"))
            if k > pair.m0 and not gk.is_zero():
                out.append((n, k, "g^k nonzero above m0"))
    return out


# ---------------------------------------------------------------------------
# transforms


def _scale_jet(j, theta, n, shift):
    return Jet(j.d, j.K, [p.scale(theta ** ((1 - k) * n + shift)) for k, p in j.parts.items()])


def rescale(seq, theta, kind="map"):
    """Conjugate by ``z -> theta^n z`` at time n.

    Maps transform as ``f_n^k -> theta^((1-k)n+1) f_n^k`` (linear part
    ``theta L_n``); conjugacies (``kind="conjugacy"``) as
    ``h_n^k -> theta^((1-k)n) h_n^k``.

    Parameters
    ----------
    seq : GermSequence, SequenceRule of Jet or of SpecialTriangularAuto, or list of Jet
    """
    shift = 1 if kind == "map" else 0
    if isinstance(seq, GermSequence):
        rule = ClosedForm(lambda n, r=seq.rule: _scale_jet(r[n], theta, n, shift))
        dd = seq.decay
        decay = DecayData(c=dd.c, lam=dd.lam * float(theta), mu=dd.mu / float(theta),
                          rigorous=dd.rigorous, note="rescaled")
        return GermSequence(rule, decay)
    if isinstance(seq, (list, tuple)):
        return [_scale_jet(j, theta, n, shift) for n, j in enumerate(seq)]
    rule = as_rule(seq)
    first = rule[0]
    if isinstance(first, SpecialTriangularAuto):
        def auto(n):
            sc = _scale_jet(rule[n].as_jet(), theta, n, shift)
            return SpecialTriangularAuto.from_jet(sc)
        if rule.kind == "finite":
            return FiniteSequence([auto(n) for n in range(len(rule))])
        return ClosedForm(auto)
    if rule.kind == "finite":
        return FiniteSequence([_scale_jet(rule[n], theta, n, shift) for n in range(len(rule))])
    return ClosedForm(lambda n: _scale_jet(rule[n], theta, n, shift))


def block(seq, N_block, K=None):
    """Compose consecutive blocks: ``f~_n = f_{(n+1)N-1} o ... o f_{nN}``.

    Works on germ sequences (truncated composition, exact through K by
    degree locality) and on matrix rules. For eventually periodic input the
    result is eventually periodic with period ``q / gcd(q, N)``.
    """
    if N_block < 1:
        raise ValueError("block length must be positive")
    if isinstance(seq, GermSequence):
        K = K or seq.K
        rule = seq.rule

        def item(n):
            out = rule[n * N_block].with_K(K)
            for j in range(n * N_block + 1, (n + 1) * N_block):
                out = compose_jets(rule[j].with_K(K), out, K)
            return out
        new = _blocked_rule(rule, N_block, item)
        dd = seq.decay
        decay = DecayData(c=dd.c, lam=dd.lam ** N_block, mu=dd.mu ** N_block,
                          rigorous=dd.rigorous, note=f"blocked by {N_block}")
        return GermSequence(new, decay)
    rule = as_rule(seq)

    def mat(n):
        out = np.asarray(rule[n * N_block])
        for j in range(n * N_block + 1, (n + 1) * N_block):
            out = np.asarray(rule[j]) @ out
        return out
    return _blocked_rule(rule, N_block, mat)


def _blocked_rule(rule, N, item):
    if rule.kind == EVENTUALLY_PERIODIC:
        p, q = rule.preperiod, rule.period
        pb = -(-p // N)
        qb = q // gcd(q, N)
        return EventuallyPeriodic([item(pb + j) for j in range(qb)], [item(j) for j in range(pb)])
    if rule.kind == "finite":
        return FiniteSequence([item(n) for n in range(len(rule) // N)])
    return ClosedForm(item)
