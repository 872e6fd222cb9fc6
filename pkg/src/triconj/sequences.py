"""Rule-based infinite sequences.

Solvers need terms arbitrarily far in the future, so sequences are described
by a rule rather than stored. Two solvable kinds exist:

* eventually periodic: an explicit preperiod followed by a repeating period;
* closed form: a Python callable ``n -> item``.

A third kind, :class:`FiniteSequence`, holds computed data over a horizon. It is
accepted by audits but rejected by solvers.
"""
from math import gcd

EVENTUALLY_PERIODIC = "eventually-periodic"
CLOSED_FORM = "closed-form"
FINITE = "finite"


class SequenceRule:
    kind = None

    def __getitem__(self, n):
        raise NotImplementedError

    def take(self, n):
        return [self[j] for j in range(n)]

    def map(self, fn):
        raise NotImplementedError

    @property
    def solvable(self):
        return self.kind != FINITE


class EventuallyPeriodic(SequenceRule):
    """``pre[0], ..., pre[p-1], period[0], ..., period[q-1], period[0], ...``"""

    kind = EVENTUALLY_PERIODIC

    def __init__(self, period, preperiod=()):
        period = list(period)
        if not period:
            raise ValueError("period must be nonempty")
        self.period_items = period
        self.preperiod_items = list(preperiod)

    @property
    def preperiod(self):
        return len(self.preperiod_items)

    @property
    def period(self):
        return len(self.period_items)

    def index(self, n):
        """Canonical index in ``range(preperiod + period)`` of term ``n``."""
        if n < 0:
            raise IndexError("negative index")
        p = self.preperiod
        if n < p:
            return n
        return p + (n - p) % self.period

    def __getitem__(self, n):
        j = self.index(n)
        p = self.preperiod
        return self.preperiod_items[j] if j < p else self.period_items[j - p]

    def map(self, fn):
        return EventuallyPeriodic([fn(x) for x in self.period_items],
                                  [fn(x) for x in self.preperiod_items])

    def items(self):
        """The ``preperiod + period`` distinct terms."""
        return self.preperiod_items + self.period_items

    def reshaped(self, preperiod, period):
        """Same sequence described with a longer preperiod and a multiple period."""
        if preperiod < self.preperiod or period % self.period:
            raise ValueError("can only lengthen the preperiod or multiply the period")
        return EventuallyPeriodic([self[preperiod + j] for j in range(period)],
                                  [self[j] for j in range(preperiod)])

    def __repr__(self):
        return (f"EventuallyPeriodic(preperiod={self.preperiod}, "
                f"period={self.period})")


class ClosedForm(SequenceRule):
    """Sequence given by a callable; terms are cached on first access."""

    kind = CLOSED_FORM

    def __init__(self, func):
        self.func = func
        self._cache = {}

    def __getitem__(self, n):
        if n < 0:
            raise IndexError("negative index")
        try:
            return self._cache[n]
        except KeyError:
            value = self._cache[n] = self.func(n)
            return value

    def map(self, fn):
        return ClosedForm(lambda n: fn(self[n]))

    def __repr__(self):
        return f"ClosedForm({self.func!r})"


class FiniteSequence(SequenceRule):
    kind = FINITE

    def __init__(self, items):
        self.items_list = list(items)

    def __getitem__(self, n):
        return self.items_list[n]

    def __len__(self):
        return len(self.items_list)

    def map(self, fn):
        return FiniteSequence([fn(x) for x in self.items_list])


def as_rule(x):
    """Coerce a list (constant rule if one item), callable or rule into a rule."""
    if isinstance(x, SequenceRule):
        return x
    if callable(x):
        return ClosedForm(x)
    return EventuallyPeriodic(list(x))


def common_shape(*rules):
    """Joint (preperiod, period) of several eventually periodic rules."""
    p, q = 0, 1
    for r in rules:
        if r.kind != EVENTUALLY_PERIODIC:
            raise TypeError("common_shape needs eventually periodic rules")
        p = max(p, r.preperiod)
        q = q * r.period // gcd(q, r.period)
    return p, q


def zip_rules(fn, *rules):
    """Rule whose n-th term is ``fn(r1[n], r2[n], ...)``."""
    if all(r.kind == EVENTUALLY_PERIODIC for r in rules):
        p, q = common_shape(*rules)
        return EventuallyPeriodic([fn(*(r[p + j] for r in rules)) for j in range(q)],
                                  [fn(*(r[j] for r in rules)) for j in range(p)])
    if any(r.kind == FINITE for r in rules):
        n = min(len(r) for r in rules if r.kind == FINITE)
        return FiniteSequence([fn(*(r[j] for r in rules)) for j in range(n)])
    return ClosedForm(lambda n: fn(*(r[n] for r in rules)))
