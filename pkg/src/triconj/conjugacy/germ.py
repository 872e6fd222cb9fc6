"""Germ-level conjugacy: extension of a jet conjugacy and residual order.

Above the degree ``k`` of a given jet conjugacy the homological equation has
no control term and, when ``lam^(k+1) mu < 1``, a unique subexponential
solution. Extending degree by degree and sampling the full residual on small
polydisks measures how fast the conjugacy equation is satisfied near 0.
"""
from dataclasses import dataclass, field

import numpy as np

from ..control import PERIODIC, CocycleRule, solve_subexp
from ..conjop import conjugacy_matrix
from ..errors import CertificateError, ConjugacyCheckError
from ..jets import HomogeneousMap, Jet, compose_jets, evaluate, torus_grid
from .. import linalg
from ..scalars import EXACT, FLOAT
from ..sequences import CLOSED_FORM, EVENTUALLY_PERIODIC, EventuallyPeriodic, as_rule, common_shape
from .formal import homological_rhs
from .germs import GermSequence


@dataclass
class GermReport:
    h: list
    K_ext: int
    r_grid: list
    sup_residual: list
    slope: float
    degree_residuals: dict = field(default_factory=dict)

    def to_json(self):
        return {"K_ext": self.K_ext, "r_grid": list(self.r_grid),
                "sup_residual": list(self.sup_residual), "slope": self.slope}


def loglog_slope(r_grid, values):
    """Least-squares slope of ``log values`` against ``log r``."""
    x = np.log(np.asarray(r_grid, dtype=float))
    y = np.log(np.maximum(np.asarray(values, dtype=float), 1e-300))
    return float(np.polyfit(x, y, 1)[0])


def _sample_points(d, samples, seed=0):
    n = max(2, int(round(samples ** (1.0 / d))))
    pts = torus_grid(d, n)
    rng = np.random.default_rng(seed)
    extra = np.exp(2j * np.pi * rng.random((samples, d)))
    return np.vstack([pts, extra])


def germ_conjugate(f, g, H, k, K_ext=6, horizon=30, r_grid=(0.1, 0.05, 0.025, 0.0125),
                   samples=256, tol=1e-12):
    """Extend a degree-k jet conjugacy ``H`` of ``f`` to ``g`` through degree ``K_ext``.

    Parameters
    ----------
    f, g : GermSequence
        Sequences with equal linear parts. Missing parts of degree above a
        jet's truncation are taken to be zero.
    H : rule or list of Jet
        ``H[n]`` with ``H[n+1] o f_n = g_n o H[n]`` through degree k.
    r_grid : sequence of float
        Polydisk radii for the sampled residual sup.

    Returns
    -------
    GermReport
        Extended jets ``h_0..h_horizon``, the residual sup over ``n`` and the
        sampled torus of radius r for each r, and the log-log slope.
    """
    if not isinstance(f, GermSequence):
        f = GermSequence(f)
    if not isinstance(g, GermSequence):
        g = GermSequence(g)
    lam, mu = f.decay.lam, f.decay.mu
    if lam ** (k + 1) * mu >= 1:
        raise CertificateError(f"lam^(k+1) mu = {lam ** (k + 1) * mu:.4g} >= 1", condition="volata")
    H = as_rule(H)
    d, mode = f.d, f.mode
    if not all(r.kind == EVENTUALLY_PERIODIC for r in (f.rule, g.rule, H)):
        raise TypeError("germ extension needs eventually periodic f, g and H; "
                        "closed-form data goes through formal_conjugate and residual_order")
    Kmax = max(K_ext, f.K, g.K)
    p, q = common_shape(f.rule, g.rule, H)
    P = p + q
    for n in range(P):
        if f.L(n).tolist() != g.L(n).tolist():
            raise ConjugacyCheckError(f"linear parts of f and g differ at n={n}", condition="kconju", n=n)
    for n in range(P):
        diff = (compose_jets(H[n + 1].with_K(k), f[n].with_K(Kmax), k)
                - compose_jets(g[n].with_K(Kmax), H[n].with_K(k), k))
        for j in range(1, k + 1):
            c = diff.part(j).max_coeff()
            if (c != 0) if mode == EXACT else (abs(c) > 1e-9):
                raise ConjugacyCheckError(f"jet conjugacy fails at n={n}, degree {j}",
                                          condition="kconju", n=n, degree=j)
    nxt = [n + 1 if n + 1 < P else p for n in range(P)]
    parts = {n: {j: H[n].part(j) for j in range(1, k + 1)} for n in range(P)}
    for j in range(k + 1, K_ext + 1):
        b = []
        for n in range(P):
            rhs = homological_rhs(f[n].with_K(Kmax), g[n].with_K(Kmax).truncate(j),
                                  Jet(d, j, list(parts[n].values())),
                                  Jet(d, j, list(parts[nxt[n]].values())), j, f.Linv(n))
            b.append(rhs.to_vector(mode))
        Af = [conjugacy_matrix(f.Linv(n), j) for n in range(P)]
        Ai = [conjugacy_matrix(f.L(n), j) for n in range(P)]
        A = CocycleRule(EventuallyPeriodic(Af[p:], Af[:p]), EventuallyPeriodic(Ai[p:], Ai[:p]))
        sol = solve_subexp(A, EventuallyPeriodic(b[p:], b[:p]), horizon=P, closure=PERIODIC)
        for n in range(P):
            parts[n][j] = HomogeneousMap.from_vector(d, j, sol.rule[n])
    hp = EventuallyPeriodic([Jet(d, K_ext, list(parts[n].values())) for n in range(p, P)],
                            [Jet(d, K_ext, list(parts[n].values())) for n in range(p)])
    return _residual_order(f, g, hp, K_ext, horizon, r_grid, samples)


def _residual_order(f, g, h_rule, K_ext, horizon, r_grid, samples):
    d = f.d
    pts = _sample_points(d, samples)
    sups = np.zeros(len(r_grid))
    deg_res = {}
    seen = set()
    for n in range(horizon):
        key = (f.rule.index(n), f.rule.index(n + 1)) if f.kind == EVENTUALLY_PERIODIC else n
        if key in seen:
            continue
        seen.add(key)
        h0, h1, fn, gn = h_rule[n], h_rule[n + 1], f[n], g[n]
        W = max(h1.degree() * fn.degree(), gn.degree() * h0.degree(), 1)
        R = (compose_jets(h1.with_K(W), fn.with_K(W), W)
             - compose_jets(gn.with_K(W), h0.with_K(W), W))
        for j, part in R.parts.items():
            deg_res[(n, j)] = part.max_coeff()
        Rf = R.to_mode(FLOAT)
        for t, r in enumerate(r_grid):
            vals = evaluate(Rf, r * pts)
            sups[t] = max(sups[t], float(np.max(np.abs(vals))))
    h = [h_rule[n] for n in range(horizon + 1)]
    return GermReport(h=h, K_ext=K_ext, r_grid=list(r_grid), sup_residual=sups.tolist(),
                      slope=loglog_slope(r_grid, sups), degree_residuals=deg_res)


def residual_order(f, g, h_rule, K_ext, horizon=30, r_grid=(0.1, 0.05, 0.025, 0.0125), samples=256):
    """Sampled residual sup and log-log slope for a given conjugacy sequence."""
    return _residual_order(as_germ(f), as_germ(g), as_rule(h_rule), K_ext, horizon, r_grid, samples)


def as_germ(x):
    return x if isinstance(x, GermSequence) else GermSequence(x)


# ---------------------------------------------------------------------------
# spectral radius of the shift operator on high degrees


def _block_operator(L_period, degrees):
    """Per-step blocks of ``(T u)_n = L_n^{-1} o u_{n+1} o L_n`` on the given degrees."""
    blocks = []
    for L in L_period:
        mats = [np.array(conjugacy_matrix(L, j).tolist(), dtype=complex) for j in degrees]
        dims = [m.shape[0] for m in mats]
        B = np.zeros((sum(dims), sum(dims)), dtype=complex)
        o = 0
        for m, s in zip(mats, dims):
            B[o:o + s, o:o + s] = m
            o += s
        blocks.append(B)
    return blocks


def spectral_bound(L_rule, k, K_trunc=None, horizon=30, lam=None, mu=None, tol=1e-6,
                   max_iter=2000, seed=0):
    """Power-iteration estimate of the spectral radius of ``T`` on degrees ``k+1..K_trunc``.

    ``T`` acts on sequences by ``(T u)_n = L_n^{-1} o u_{n+1} o L_n``. For an
    eventually periodic rule the periodic part is used; a closed-form rule is
    closed periodically after ``horizon`` terms. ``T^q`` is block diagonal with
    the monodromy conjugacy operators, so iterating one period at a time
    removes the rotation between the blocks.

    Returns
    -------
    dict
        ``rho_estimate``, ``analytic_bound = lam^(k+1) mu``, ``holds``,
        ``converged``, ``history`` and the eigenvalue cross-check ``rho_eig``.
    """
    rule = as_rule(L_rule)
    if rule.kind == EVENTUALLY_PERIODIC:
        period = [np.asarray(rule[rule.preperiod + j]) for j in range(rule.period)]
    elif rule.kind == CLOSED_FORM:
        period = [np.asarray(rule[n]) for n in range(horizon)]
    else:
        period = [np.asarray(rule[n]) for n in range(len(rule))]
    period = [linalg.to_mode(L, FLOAT) if L.dtype == object else L.astype(complex) for L in period]
    if lam is None:
        lam = max(linalg.norm_inf(L) for L in period)
    if mu is None:
        mu = max(linalg.norm_inf(np.linalg.inv(L)) for L in period)
    K_trunc = K_trunc or k + 3
    degrees = list(range(k + 1, K_trunc + 1))
    blocks = _block_operator(period, degrees)
    q = len(blocks)
    # T^q on the n = 0 slot: B_0 B_1 ... B_{q-1}
    mon = np.eye(blocks[0].shape[0], dtype=complex)
    for B in blocks:
        mon = mon @ B
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(mon.shape[0]) + 1j * rng.standard_normal(mon.shape[0])
    x /= np.linalg.norm(x)
    history, est, converged = [], 0.0, False
    for _ in range(max_iter):
        y = mon @ x
        nrm = np.linalg.norm(y)
        if nrm == 0:
            est, converged = 0.0, True
            history.append(0.0)
            break
        new = nrm ** (1.0 / q)
        history.append(new)
        x = y / nrm
        if len(history) > 3 and abs(new - est) <= 1e-13 * max(new, 1e-300):
            est, converged = new, True
            break
        est = new
    rho_eig = float(np.max(np.abs(np.linalg.eigvals(mon)))) ** (1.0 / q)
    bound = lam ** (k + 1) * mu
    if not converged:
        raise CertificateError("power iteration did not converge", condition="spectral",
                               history=history[-10:])
    return {"rho_estimate": float(est), "analytic_bound": float(bound),
            "holds": bool(est <= bound * (1 + tol)), "converged": converged,
            "history": history, "rho_eig": rho_eig, "degrees": degrees}
