"""Scalar layer shared by the exact and floating-point code paths.

Exact scalars are ``gmpy2.mpq`` for real rationals and :class:`QQi` for
Gaussian rationals (complex numbers with rational parts). Float scalars are
plain Python ``complex``. Every algorithm in the package only uses ``+ - * /``,
``abs`` and comparisons with zero, so the same code runs in either mode.
"""
from fractions import Fraction
import numbers

import gmpy2
from gmpy2 import mpq

EXACT = "exact"
FLOAT = "float"
MODES = (EXACT, FLOAT)

_MPQ = type(mpq(0))


class QQi:
    """Complex number with rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re, im=0):
        self.re = mpq(re)
        self.im = mpq(im)

    @staticmethod
    def _make(re, im):
        if im == 0:
            return re
        obj = QQi.__new__(QQi)
        obj.re = re
        obj.im = im
        return obj

    @staticmethod
    def _parts(x):
        if isinstance(x, QQi):
            return x.re, x.im
        if isinstance(x, (int, _MPQ, Fraction)):
            return mpq(x), mpq(0)
        return NotImplemented

    @staticmethod
    def _inexact(other):
        """Floats and complexes demote to ``complex``; arrays and unknown types defer."""
        return isinstance(other, numbers.Number)

    def __add__(self, other):
        o = QQi._parts(other)
        if o is NotImplemented:
            return complex(self) + other if QQi._inexact(other) else NotImplemented
        return QQi._make(self.re + o[0], self.im + o[1])

    __radd__ = __add__

    def __sub__(self, other):
        o = QQi._parts(other)
        if o is NotImplemented:
            return complex(self) - other if QQi._inexact(other) else NotImplemented
        return QQi._make(self.re - o[0], self.im - o[1])

    def __rsub__(self, other):
        o = QQi._parts(other)
        if o is NotImplemented:
            return other - complex(self) if QQi._inexact(other) else NotImplemented
        return QQi._make(o[0] - self.re, o[1] - self.im)

    def __mul__(self, other):
        o = QQi._parts(other)
        if o is NotImplemented:
            return complex(self) * other if QQi._inexact(other) else NotImplemented
        a, b = o
        return QQi._make(self.re * a - self.im * b, self.re * b + self.im * a)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = QQi._parts(other)
        if o is NotImplemented:
            return complex(self) / other if QQi._inexact(other) else NotImplemented
        a, b = o
        den = a * a + b * b
        if den == 0:
            raise ZeroDivisionError("division by zero")
        return QQi._make((self.re * a + self.im * b) / den,
                         (self.im * a - self.re * b) / den)

    def __rtruediv__(self, other):
        o = QQi._parts(other)
        if o is NotImplemented:
            return other / complex(self) if QQi._inexact(other) else NotImplemented
        return QQi._make(*o) / self if o[1] != 0 else QQi(o[0]) / self

    def __neg__(self):
        return QQi._make(-self.re, -self.im)

    def __pos__(self):
        return self

    def __pow__(self, n):
        if not isinstance(n, int):
            return complex(self) ** n
        if n < 0:
            return 1 / (self ** (-n))
        result, base = mpq(1), self
        while n:
            if n & 1:
                result = base * result
            base = base * base
            n >>= 1
        return result

    def __abs__(self):
        return abs(complex(self))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def conjugate(self):
        return QQi._make(self.re, -self.im)

    def __eq__(self, other):
        o = QQi._parts(other)
        if o is NotImplemented:
            try:
                return complex(self) == complex(other)
            except TypeError:
                return NotImplemented
        return self.re == o[0] and self.im == o[1]

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def __repr__(self):
        return f"QQi({self.re}, {self.im})"


def is_exact(x):
    return isinstance(x, (_MPQ, QQi, int, Fraction))


def parse_rational(s):
    """Parse ``"p/q"``, ``"p"`` or a decimal string into an ``mpq``."""
    s = s.strip()
    if "/" in s:
        p, q = s.split("/")
        return mpq(int(p), int(q))
    return mpq(Fraction(s))


def to_exact(x):
    """Convert ints, Fractions, strings, floats and complex numbers to exact scalars."""
    if isinstance(x, (_MPQ, QQi)):
        return x
    if isinstance(x, str):
        return parse_rational(x)
    if isinstance(x, (int, Fraction)):
        return mpq(x)
    if isinstance(x, numbers.Real):
        return mpq(float(x))
    if isinstance(x, numbers.Complex):
        c = complex(x)
        return QQi._make(mpq(c.real), mpq(c.imag))
    if isinstance(x, tuple) and len(x) == 2:
        return QQi._make(to_exact(x[0]), to_exact(x[1]))
    raise TypeError(f"cannot convert {x!r} to an exact scalar")


def to_float(x):
    if isinstance(x, str):
        return complex(float(parse_rational(x)))
    return complex(x)


def convert(x, mode):
    if mode == EXACT:
        return to_exact(x)
    if mode == FLOAT:
        return to_float(x)
    raise ValueError(f"unknown mode {mode!r}")


def real_imag(x):
    """Split a scalar into (real, imaginary) parts of matching kind."""
    if isinstance(x, QQi):
        return x.re, x.im
    if isinstance(x, (_MPQ, int, Fraction)):
        return mpq(x), mpq(0)
    c = complex(x)
    return c.real, c.imag


def exact_abs(x):
    """|x| exactly when it is rational, else as a float."""
    if isinstance(x, (_MPQ, int, Fraction)):
        return abs(mpq(x))
    if isinstance(x, QQi):
        sq = x.re * x.re + x.im * x.im
        root = gmpy2.isqrt(sq.numerator * sq.denominator)
        if root * root == sq.numerator * sq.denominator:
            return mpq(root, sq.denominator)
        return abs(x)
    return abs(x)


def format_part(v):
    """JSON form of one real part: exact rationals as ``"p/q"`` strings."""
    if isinstance(v, _MPQ):
        return str(v) if v.denominator != 1 else str(v.numerator)
    return float(v)


def parse_part(v):
    if isinstance(v, str):
        return parse_rational(v)
    return v


def scalar_to_json(x):
    re, im = real_imag(x)
    return format_part(re), format_part(im)


def scalar_from_json(re, im=0):
    re, im = parse_part(re), parse_part(im)
    if isinstance(re, (_MPQ, int)) and isinstance(im, (_MPQ, int)):
        return QQi._make(mpq(re), mpq(im))
    return complex(float(re), float(im))


def parse_scalar(v):
    """Parse a matrix entry: number, ``"p/q"`` string, or ``[re, im]`` pair."""
    if isinstance(v, (list, tuple)):
        return scalar_from_json(*v)
    if isinstance(v, dict):
        return scalar_from_json(v.get("re", 0), v.get("im", 0))
    if isinstance(v, str):
        return parse_rational(v)
    if isinstance(v, int):
        return mpq(v)
    return complex(v)
