"""Exact multivariate polynomials in x^0..x^{D-1}, used as test fields.

Coefficients are Gaussian integers over one common positive denominator,
so the inner loops run on plain ints.
"""

from __future__ import annotations

import random
from fractions import Fraction
from math import gcd
from typing import Dict, Mapping, Optional, Tuple

from .coeff import QI, as_qi
from .expr import Expr, IndexError_
from .poly import COORD

Exps = Tuple[int, ...]
GInt = Tuple[int, int]


def _lcm(a: int, b: int) -> int:
    return a // gcd(a, b) * b


class Polynomial:
    """Sparse polynomial with exact complex-rational coefficients."""

    __slots__ = ("nvars", "num", "den")

    def __init__(self, nvars: int, terms: Optional[Mapping[Exps, object]] = None):
        self.nvars = nvars
        qs = {}
        for e, c in (terms or {}).items():
            e = tuple(e)
            if len(e) != nvars:
                raise ValueError("exponent length mismatch")
            c = as_qi(c)
            qs[e] = qs[e] + c if e in qs else c
        den = 1
        for c in qs.values():
            den = _lcm(den, _lcm(c.re.denominator, c.im.denominator))
        self.den = den
        self.num = {}
        for e, c in qs.items():
            if c:
                self.num[e] = (int(c.re * den), int(c.im * den))
        self._reduce()

    @classmethod
    def _make(cls, nvars: int, num: Dict[Exps, GInt], den: int) -> "Polynomial":
        p = object.__new__(cls)
        p.nvars, p.num, p.den = nvars, num, den
        p._reduce()
        return p

    def _reduce(self) -> None:
        self.num = {e: v for e, v in self.num.items() if v != (0, 0)}
        if not self.num:
            self.den = 1
            return
        g = self.den
        for a, b in self.num.values():
            g = gcd(g, gcd(a, b))
            if g == 1:
                return
        if g > 1:
            self.den //= g
            self.num = {e: (a // g, b // g) for e, (a, b) in self.num.items()}

    @property
    def terms(self) -> Dict[Exps, QI]:
        return {e: QI(Fraction(a, self.den), Fraction(b, self.den)) for e, (a, b) in self.num.items()}

    @classmethod
    def const(cls, nvars: int, c) -> "Polynomial":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def var(cls, nvars: int, i: int) -> "Polynomial":
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): 1})

    @classmethod
    def random(cls, nvars: int, degree: int, rng: random.Random, density: float = 0.6,
               complex_coeffs: bool = True, bound: int = 5) -> "Polynomial":
        terms = {}
        for e in _exponents(nvars, degree):
            if rng.random() < density:
                re = Fraction(rng.randint(-bound, bound), rng.randint(1, bound))
                im = Fraction(rng.randint(-bound, bound), rng.randint(1, bound)) if complex_coeffs else 0
                terms[e] = QI(re, im)
        return cls(nvars, terms)

    def __add__(self, other: "Polynomial") -> "Polynomial":
        den = _lcm(self.den, other.den)
        fa, fb = den // self.den, den // other.den
        out = {e: (a * fa, b * fa) for e, (a, b) in self.num.items()}
        for e, (a, b) in other.num.items():
            s = out.get(e, (0, 0))
            out[e] = (s[0] + a * fb, s[1] + b * fb)
        return Polynomial._make(self.nvars, out, den)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c) -> "Polynomial":
        c = as_qi(c)
        den = _lcm(c.re.denominator, c.im.denominator)
        cr, ci = int(c.re * den), int(c.im * den)
        num = {e: (a * cr - b * ci, a * ci + b * cr) for e, (a, b) in self.num.items()}
        return Polynomial._make(self.nvars, num, self.den * den)

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return self.scale(other)
        out: Dict[Exps, list] = {}
        for ea, (ar, ai) in self.num.items():
            for eb, (br, bi) in other.num.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                s = out.get(e)
                if s is None:
                    out[e] = [ar * br - ai * bi, ar * bi + ai * br]
                else:
                    s[0] += ar * br - ai * bi
                    s[1] += ar * bi + ai * br
        return Polynomial._make(self.nvars, {e: (v[0], v[1]) for e, v in out.items()},
                                self.den * other.den)

    def diff(self, i: int) -> "Polynomial":
        out = {}
        for e, (a, b) in self.num.items():
            k = e[i]
            if k:
                ne = list(e)
                ne[i] -= 1
                out[tuple(ne)] = (a * k, b * k)
        return Polynomial._make(self.nvars, out, self.den)

    def is_zero(self) -> bool:
        return not self.num

    def __eq__(self, other):
        return (isinstance(other, Polynomial) and self.nvars == other.nvars
                and self.den == other.den and self.num == other.num)

    def __call__(self, point) -> QI:
        total = QI(0)
        for e, c in self.terms.items():
            v = c
            for x, k in zip(point, e):
                if k:
                    v = v * as_qi(x) ** k
            total = total + v
        return total

    def __repr__(self):
        return f"Polynomial({self.nvars}, {len(self.num)} terms)"


def _exponents(nvars: int, degree: int):
    if nvars == 0:
        yield ()
        return
    for k in range(degree + 1):
        for rest in _exponents(nvars - 1, degree - k):
            yield (k,) + rest


def eval_polynomial(e: Expr, assignment: Mapping[str, Polynomial], m=1,
                    bind: Optional[Mapping[str, int]] = None,
                    signature: Optional[Tuple[int, ...]] = None) -> Polynomial:
    """Evaluate ``e`` exactly on polynomial fields.

    Derivative atoms are differentiated analytically in their stored order.
    Free labels must be bound through ``bind``; ``m`` is the (rational) mass.
    Summed indices and metric factors were already resolved with the
    time-like signature when ``e`` was built; ``signature`` is only checked.
    """
    D = e.dim
    if signature is not None and tuple(signature) != (1,) + (-1,) * (D - 1):
        raise ValueError("only the time-like signature (+,-,...,-) is supported")
    bind = dict(bind or {})
    if e.free:
        missing = [n for n in e.free_names if n not in bind]
        if missing:
            raise IndexError_(f"unbound free index {missing}")
    poly = e.component(**bind) if e.free else e.component()
    m = as_qi(Fraction(m))
    cache: Dict[object, Polynomial] = {}

    def atom_poly(at) -> Polynomial:
        got = cache.get(at)
        if got is not None:
            return got
        if at.field == COORD:
            val = Polynomial.var(D, at.index[0])
        else:
            if at.field not in assignment:
                raise KeyError(f"missing field {at.field!r} in assignment")
            val = assignment[at.field]
            if val.nvars != D:
                raise ValueError(f"field {at.field!r} polynomial has {val.nvars} variables, need {D}")
            for s in reversed(at.index):   # innermost derivative acts first
                val = val.diff(s)
        cache[at] = val
        return val

    total = Polynomial(D)
    for (mp, mono), c in poly.items():
        term = Polynomial.const(D, c * m ** mp)
        for at in mono:
            term = term * atom_poly(at)
            if term.is_zero():
                break
        total = total + term
    return total
