"""Degree cutoff selection and the diagonal ordering condition.

The ordering condition asks that the left side::

    max_h |lam_{n+l,n}(h)| * max_{i <= j} |lam_{n+l,n}(j)| / |lam_{n+l,n}(i)|

with ``lam_{n+l,n}(j) = prod_{m=n}^{n+l-1} lam_m(j)`` be ``O(theta^n lam^l)`` for
every ``theta > 1``.
"""
from dataclasses import dataclass, field
from math import exp, log

from gmpy2 import mpq

from ..scalars import exact_abs
from ..sequences import as_rule

DEFAULT_THETAS = (1.05, 1.1, 1.25, 1.5, 2.0)


def select_m0(lam, mu):
    """Smallest ``m0 >= 1`` with ``lam^(m0+1) mu < 1``.

    >>> select_m0(0.5, 4)
    2
    """
    if not 0 < lam < 1 or mu <= 0:
        raise ValueError("need 0 < lam < 1 and mu > 0")
    m0 = 1
    while lam ** (m0 + 1) * mu >= 1:
        m0 += 1
    return m0


@dataclass
class OrdReport:
    theta_grid: list
    C: dict
    C_half: dict
    max_ratio: dict
    verdict: str
    witness: tuple = None
    lam: float = None
    horizon: int = None
    growth: dict = field(default_factory=dict)

    @property
    def consistent(self):
        return self.verdict == "consistent"

    def to_json(self):
        w = None
        if self.witness is not None:
            n, l, lhs = self.witness
            w = {"n": n, "l": l, "lhs": str(lhs)}
        return {"theta_grid": list(self.theta_grid), "C": {str(t): c for t, c in self.C.items()},
                "verdict": self.verdict, "witness": w, "lambda": self.lam, "horizon": self.horizon}


def check_ord(diag_rule, lam, theta_grid=DEFAULT_THETAS, horizon=40, growth_tol=1e-3):
    """Evaluate the ordering condition over ``n + l <= horizon``.

    For each theta the constant ``C(theta) = max lhs / (theta^n lam^l)`` is
    computed on the full triangle and on the half triangle
    ``n + l <= horizon/2``. The condition is flagged as violated when, for
    some theta, ``C`` grows between the two at a rate above ``growth_tol`` per
    step; the witness is the ``(n, l, lhs)`` attaining the full-triangle
    maximum for the worst theta. Exact rational diagonals give an exact lhs.
    """
    rule = as_rule(diag_rule)
    moduli = []
    for m in range(horizon):
        row = [exact_abs(x) for x in rule[m]]
        if any(x == 0 for x in row):
            raise ZeroDivisionError(f"zero diagonal entry at n={m}")
        moduli.append(row)
    exact = all(isinstance(x, type(mpq(1))) for row in moduli for x in row)
    if not exact:
        moduli = [[float(x) for x in row] for row in moduli]
    d = len(moduli[0])
    lhs = {}
    for n in range(horizon + 1):
        one = mpq(1) if exact else 1.0
        prod = [one] * d
        lhs[(n, 0)] = one
        for l in range(1, horizon - n + 1):
            prod = [p * x for p, x in zip(prod, moduli[n + l - 1])]
            top = max(prod)
            ratio = max(prod[j] / prod[i] for i in range(d) for j in range(i, d))
            lhs[(n, l)] = top * ratio
    half = horizon // 2
    C, C_half, arg, growth = {}, {}, {}, {}
    lg = log(lam)
    for theta in theta_grid:
        lt = log(theta)
        best, best_half, where = -float("inf"), -float("inf"), None
        for (n, l), v in lhs.items():
            s = log(float(v)) - n * lt - l * lg
            if s > best:
                best, where = s, (n, l)
            if n + l <= half and s > best_half:
                best_half = s
        C[theta] = exp(best) if best < 700 else float("inf")
        C_half[theta] = exp(best_half) if best_half < 700 else float("inf")
        growth[theta] = (best - best_half) / max(1, horizon - half)
        arg[theta] = where
    worst = max(theta_grid, key=lambda t: growth[t])
    violated = growth[worst] > growth_tol
    witness = None
    if violated:
        n, l = arg[worst]
        witness = (n, l, lhs[(n, l)])
    return OrdReport(theta_grid=list(theta_grid), C=C, C_half=C_half, max_ratio=dict(C),
                     verdict="violated" if violated else "consistent", witness=witness,
                     lam=float(lam), horizon=horizon, growth=growth)
