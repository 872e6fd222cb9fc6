"""Sequences of germs and the conjugacy data attached to them."""
from dataclasses import dataclass, field

from .. import linalg
from ..control import DecayData
from ..jets import Jet
from ..scalars import EXACT, FLOAT
from ..sequences import (EVENTUALLY_PERIODIC, EventuallyPeriodic, as_rule)


def _sample_indices(rule, horizon=64):
    if rule.kind == EVENTUALLY_PERIODIC:
        return range(rule.preperiod + rule.period)
    if rule.kind == "finite":
        return range(len(rule))
    return range(horizon)


class GermSequence:
    """Rule ``n -> f_n`` of jets whose linear parts are lower triangular.

    Parameters
    ----------
    rule : SequenceRule of Jet, or list of Jet (a periodic rule)
    decay : DecayData, optional
        ``c, lam, mu`` with ``||L_{n,m}|| <= c lam^(n-m)`` and
        ``||L_{n,m}^{-1}|| <= c mu^(n-m)``. When omitted, ``c = 1`` and the
        largest per-step norms are used; this is rigorous for eventually
        periodic rules and an estimate otherwise.
    """

    def __init__(self, rule, decay=None):
        self.rule = as_rule(rule)
        first = self.rule[0]
        self.d = first.d
        self.K = first.K
        self.mode = EXACT if first.is_exact() else FLOAT
        self._L = {}
        self._Linv = {}
        for n in _sample_indices(self.rule):
            L = self.L(n)
            if not linalg.is_lower(L) or any(L[i, i] == 0 for i in range(self.d)):
                raise ValueError(f"linear part at n={n} is not lower triangular and invertible")
        if decay is None:
            decay = self.estimate_decay()
        self.decay = decay

    @property
    def kind(self):
        return self.rule.kind

    def __getitem__(self, n):
        return self.rule[n]

    def _key(self, n):
        return self.rule.index(n) if self.kind == EVENTUALLY_PERIODIC else n

    def L(self, n):
        key = self._key(n)
        if key not in self._L:
            self._L[key] = self.rule[n].linear_matrix(self.mode)
        return self._L[key]

    def Linv(self, n):
        key = self._key(n)
        if key not in self._Linv:
            self._Linv[key] = linalg.inv(self.L(n))
        return self._Linv[key]

    def diag(self, n):
        return tuple(linalg.diagonal(self.L(n)))

    def diag_rule(self):
        return self.rule.map(lambda j: tuple(linalg.diagonal(j.linear_matrix(self.mode))))

    def linear_rule(self):
        return self.rule.map(lambda j: j.linear_matrix(self.mode))

    def estimate_decay(self, horizon=64):
        ns = _sample_indices(self.rule, horizon)
        lam = max(linalg.norm_inf(self.L(n)) for n in ns)
        mu = max(linalg.norm_inf(self.Linv(n)) for n in ns)
        rig = self.kind == EVENTUALLY_PERIODIC
        return DecayData(c=1.0, lam=lam, mu=mu, rigorous=rig,
                         note="per-step norms" + ("" if rig else f" over n < {horizon}"))

    def to_mode(self, mode):
        return GermSequence(self.rule.map(lambda j: j.to_mode(mode)), self.decay)

    def to_json(self):
        obj = {"d": self.d, "K": self.K,
               "decay": {"c": self.decay.c, "lambda": self.decay.lam, "mu": self.decay.mu}}
        if self.kind == EVENTUALLY_PERIODIC:
            obj["preperiod"] = [j.to_json() for j in self.rule.preperiod_items]
            obj["period"] = [j.to_json() for j in self.rule.period_items]
        else:
            raise TypeError("only eventually periodic sequences serialize")
        return obj

    @classmethod
    def from_json(cls, obj):
        rule = EventuallyPeriodic([Jet.from_json(j) for j in obj["period"]],
                                  [Jet.from_json(j) for j in obj.get("preperiod", [])])
        decay = None
        if "decay" in obj:
            dd = obj["decay"]
            decay = DecayData(c=float(dd.get("c", 1.0)), lam=float(dd["lambda"]), mu=float(dd["mu"]))
        return cls(rule, decay)


@dataclass
class ConjugacyPair:
    """Normal form ``g`` and conjugacy ``h`` with ``h_{n+1} o f_n = g_n o h_n``.

    ``g`` is a rule of :class:`~triconj.triangular.SpecialTriangularAuto`;
    ``h`` holds jets for ``n = 0..horizon`` and ``h_rule`` the whole sequence
    when it is eventually periodic. ``residual_report`` maps ``(n, k)`` to the
    coefficient norm of the degree-k residual.
    """

    g: object
    h: list
    m0: int
    K: int
    residual_report: dict
    h_rule: object = None
    g_jets: object = None
    closure: str = "periodic"
    tail_bounds: dict = field(default_factory=dict)
    solutions: dict = field(default_factory=dict)

    @property
    def horizon(self):
        return len(self.h) - 1

    def max_residual(self):
        return max((float(abs(v)) for v in self.residual_report.values()), default=0.0)

    def residuals_exact_zero(self):
        return all(v == 0 for v in self.residual_report.values())

    def to_json(self):
        from ..scalars import format_part
        res = []
        for (n, k), v in sorted(self.residual_report.items()):
            res.append({"n": n, "k": k, "residual": str(format_part(v)) if not isinstance(v, float) else v})
        return {"m0": self.m0, "K": self.K, "closure": self.closure,
                "h": [j.to_json() for j in self.h],
                "g": [self.g[n].to_json() for n in range(self.horizon)],
                "residuals": res}
