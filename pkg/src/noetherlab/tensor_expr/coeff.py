"""Exact complex rationals (Gaussian rationals) for the symbolic core."""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

__all__ = ["QI", "as_qi", "I", "ONE", "ZERO"]


class QI:
    """A complex number ``re + i*im`` with :class:`~fractions.Fraction` parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if type(re) is Fraction else Fraction(re)
        self.im = im if type(im) is Fraction else Fraction(im)

    @classmethod
    def _raw(cls, re: Fraction, im: Fraction) -> "QI":
        obj = object.__new__(cls)
        obj.re = re
        obj.im = im
        return obj

    @classmethod
    def parse(cls, text: str) -> "QI":
        """Inverse of :meth:`__str__` for the ``a``, ``a+bi`` and ``bi`` forms."""
        t = text.replace(" ", "")
        if not t.endswith("i"):
            return cls(Fraction(t))
        body = t[:-1]
        # split at the last sign that is not the leading one
        for pos in range(len(body) - 1, 0, -1):
            if body[pos] in "+-":
                return cls(Fraction(body[:pos]), Fraction(body[pos:] + ("1" if body[pos:] in "+-" else "")))
        if body in ("", "+", "-"):
            body += "1"
        return cls(0, Fraction(body))

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        o = as_qi(other)
        return QI._raw(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = as_qi(other)
        return QI._raw(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return as_qi(other) - self

    def __neg__(self):
        return QI._raw(-self.re, -self.im)

    def __mul__(self, other):
        o = as_qi(other)
        if not o.im:
            return QI._raw(self.re * o.re, self.im * o.re)
        if not self.im:
            return QI._raw(self.re * o.re, self.re * o.im)
        return QI._raw(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = as_qi(other)
        den = o.re * o.re + o.im * o.im
        if not den:
            raise ZeroDivisionError("QI division by zero")
        num = self * o.conjugate()
        return QI._raw(num.re / den, num.im / den)

    def __pow__(self, n: int):
        if n < 0:
            return ONE / (self ** -n)
        out = ONE
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def conjugate(self) -> "QI":
        return QI._raw(self.re, -self.im)

    # comparisons -----------------------------------------------------------
    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        try:
            o = as_qi(other)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"QI({self.re!s}, {self.im!s})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        im = "" if abs(self.im) == 1 else f"{abs(self.im)} "
        if not self.re:
            return f"{'-' if self.im < 0 else ''}{im}i"
        return f"{self.re}{'-' if self.im < 0 else '+'}{im}i"


def as_qi(x) -> QI:
    if type(x) is QI:
        return x
    if isinstance(x, (int, Rational)):
        return QI._raw(Fraction(x), Fraction(0))
    if isinstance(x, complex):
        raise TypeError("floating complex values are not allowed in the exact core")
    raise TypeError(f"cannot convert {type(x).__name__} to an exact coefficient")


ZERO = QI(0)
ONE = QI(1)
I = QI(0, 1)
