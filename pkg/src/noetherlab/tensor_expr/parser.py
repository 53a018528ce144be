"""Parser for the small Lagrangian DSL.

Grammar::

    expr   := term (("+"|"-") term)*
    term   := item (["*"] item)*
    item   := coeff | factor
    coeff  := int ["/" int] | "i"
    factor := field | "d[" label "]" factor | "lap" factor
            | "g[" label "," label "]" | "x[" label "]" | "m^" int | "m"
    field  := identifier ["*"]           (the suffix selects the conjugate)

Derivative slots ``d[.]`` are lower, ``x[.]`` is upper, and the metric ``g``
may pair with either.  A label used twice in a term is summed; it must pair an
upper with a lower slot, so ``d[mu] d[mu] phi`` is rejected (raise with ``g``).
Labels that are plain integers are concrete component values.  ``lap`` is
the spatial Laplacian sum_a d_a d_a (a = 1..D-1).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Optional, Tuple

from .coeff import I, ONE, QI
from .expr import (
    Expr, Index, IndexError_, constant, coordinate, field as field_atom, metric,
    metric_sign, total_derivative,
)

__all__ = ["ParseError", "parse_expr"]

RESERVED = {"d", "g", "x", "lap", "m", "i"}


class ParseError(ValueError):
    def __init__(self, msg: str, text: str, pos: int):
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"{line}:{col}: {msg}")
        self.msg = msg
        self.pos = pos
        self.line = line
        self.col = col


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<id>[A-Za-z_][A-Za-z_0-9]*\*?)|(?P<op>[-+*/^\[\],]))")


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> List[_Tok]:
    toks, pos = [], 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


@dataclass
class _Slot:
    name: str          # user label
    internal: str      # unique per occurrence
    variance: str      # "up", "down" or "any"
    pos: int


class _Parser:
    def __init__(self, text: str, dim: int, fields: Iterable[str]):
        self.text = text
        self.dim = dim
        base = set()
        for f in fields:
            base.add(f[:-1] if f.endswith("*") else f)
        self.fields = base | {f + "*" for f in base}
        self.toks = _tokenize(text)
        self.i = 0
        self.counter = 0

    # token helpers
    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def err(self, msg: str, tok: Optional[_Tok] = None):
        raise ParseError(msg, self.text, (tok or self.tok).pos)

    def eat(self, text: str) -> _Tok:
        if self.tok.text != text:
            self.err(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        t = self.tok
        self.i += 1
        return t

    # grammar
    def parse(self) -> Expr:
        terms = []
        sign = 1
        if self.tok.text in "+-" and self.tok.kind == "op":
            sign = -1 if self.tok.text == "-" else 1
            self.i += 1
        start = self.tok
        terms.append((sign, self.term(), start))
        while self.tok.kind == "op" and self.tok.text in "+-":
            sign = -1 if self.tok.text == "-" else 1
            self.i += 1
            start = self.tok
            terms.append((sign, self.term(), start))
        if self.tok.kind != "eof":
            self.err(f"unexpected token {self.tok.text!r}")
        total = None
        for sign, e, tok in terms:
            e = e.scale(sign)
            if total is None:
                total = e
            elif {ix.name for ix in total.free} != {ix.name for ix in e.free}:
                self.err(f"free indices {sorted(e.free_names)} differ from "
                         f"{sorted(total.free_names)} of the first term", tok)
            else:
                try:
                    total = total + e
                except IndexError_ as exc:
                    self.err(str(exc), tok)
        return total

    def term(self) -> Expr:
        coeff = ONE
        factors: List[Tuple[Expr, List[_Slot]]] = []
        while True:
            t = self.tok
            if t.kind == "num":
                coeff = coeff * self.rational()
            elif t.kind == "id" and t.text == "i":
                self.i += 1
                coeff = coeff * I
            else:
                factors.append(self.factor())
            if self.tok.text == "*" and self.tok.kind == "op":
                self.i += 1
                continue
            if self.tok.kind in ("id", "num"):   # juxtaposition multiplies
                continue
            break
        return self.combine(coeff, factors)

    def rational(self) -> QI:
        num = int(self.eat_kind("num").text)
        if self.tok.text == "/":
            self.i += 1
            den_tok = self.tok
            den = int(self.eat_kind("num").text)
            if den == 0:
                self.err("division by zero", den_tok)
            return QI(Fraction(num, den))
        return QI(num)

    def eat_kind(self, kind: str) -> _Tok:
        if self.tok.kind != kind:
            self.err(f"expected {'a number' if kind == 'num' else kind}, found {self.tok.text or 'end of input'!r}")
        t = self.tok
        self.i += 1
        return t

    def label(self, variance: str) -> Tuple[object, Optional[_Slot]]:
        t = self.tok
        if t.kind == "num":
            self.i += 1
            v = int(t.text)
            if v >= self.dim:
                self.err(f"concrete index {v} out of range for D={self.dim}", t)
            return v, None
        if t.kind == "id" and not t.text.endswith("*"):
            self.i += 1
            self.counter += 1
            slot = _Slot(t.text, f"{t.text}#{self.counter}", variance, t.pos)
            return Index(slot.internal, variance == "up"), slot
        self.err(f"expected an index label, found {t.text or 'end of input'!r}")

    def factor(self) -> Tuple[Expr, List[_Slot]]:
        t = self.tok
        if t.kind != "id":
            self.err(f"expected a factor, found {t.text or 'end of input'!r}")
        name = t.text
        if name == "d":
            self.i += 1
            self.eat("[")
            ix, slot = self.label("down")
            self.eat("]")
            inner, slots = self.factor()
            inner = total_derivative(inner, ix)
            return inner, slots + ([slot] if slot is not None else [])
        if name == "lap":
            self.i += 1
            inner, slots = self.factor()
            acc = Expr.zero(self.dim, inner.free)
            for a in range(1, self.dim):
                acc = acc + total_derivative(total_derivative(inner, a), a)
            return acc, slots
        if name == "g":
            self.i += 1
            self.eat("[")
            a, sa = self.label("any")
            self.eat(",")
            b, sb = self.label("any")
            self.eat("]")
            return _metric_factor(self.dim, a, b), [s for s in (sa, sb) if s is not None]
        if name == "x":
            self.i += 1
            self.eat("[")
            a, sa = self.label("up")
            self.eat("]")
            return coordinate(self.dim, a), [sa] if sa else []
        if name == "m":
            self.i += 1
            power = 1
            if self.tok.text == "^":
                self.i += 1
                neg = False
                if self.tok.text == "-":
                    self.i += 1
                    neg = True
                power = int(self.eat_kind("num").text) * (-1 if neg else 1)
            return constant(self.dim, 1, power), []
        if name in RESERVED:
            self.err(f"reserved word {name!r} cannot be used here")
        if name not in self.fields:
            self.err(f"unknown field {name!r} (declared: {sorted(self.fields)})")
        self.i += 1
        return field_atom(self.dim, name), []

    def combine(self, coeff: QI, factors) -> Expr:
        slots: List[_Slot] = [s for _, ss in factors for s in ss]
        by_name = {}
        for s in sorted(slots, key=lambda s: s.pos):
            by_name.setdefault(s.name, []).append(s)
        for name, occ in by_name.items():
            if len(occ) > 2:
                raise ParseError(f"index {name!r} appears {len(occ)} times in one term", self.text, occ[2].pos)
            if len(occ) == 2:
                va, vb = occ[0].variance, occ[1].variance
                if va == vb and va != "any":
                    raise ParseError(
                        f"index {name!r} pairs two {'lower' if va == 'down' else 'upper'} slots; "
                        f"raise one explicitly with g[.,.]", self.text, occ[1].pos)
        # multiply factor by factor, contracting pairs as soon as both ends are present
        acc = constant(self.dim, coeff)
        for e, _ in factors:
            have = set(acc.free_names)
            pairs = []
            for ix in e.free:
                user = ix.name.split("#")[0]
                for other in by_name[user]:
                    if other.internal != ix.name and other.internal in have:
                        pairs.append((other.internal, ix.name))
            acc = acc.product(e, contract=pairs)
        # pairs living inside a single factor, e.g. d[mu] x[mu]
        for name, occ in by_name.items():
            if len(occ) == 2 and all(s.internal in acc.free_names for s in occ):
                acc = acc.contract(occ[0].internal, occ[1].internal)
        mapping = {}
        for ix in acc.free:
            user = ix.name.split("#")[0]
            mapping[ix.name] = Index(user, ix.up)
        return acc.rename(mapping)


def _metric_factor(dim: int, a, b) -> Expr:
    if isinstance(a, int) and isinstance(b, int):
        return constant(dim, metric_sign(a) if a == b else 0)
    if isinstance(a, int) or isinstance(b, int):
        lab = b if isinstance(a, int) else a
        val = a if isinstance(a, int) else b
        return Expr(dim, (lab,), {(val,): {(0, ()): QI(metric_sign(val))}})
    if a.name == b.name:
        raise IndexError_("g[a,a] is a trace; write the dimension explicitly")
    return metric(dim, a, b)


def parse_expr(text: str, dim: int = 4, fields: Iterable[str] = ("phi",)) -> Expr:
    """Parse a DSL string into a canonical :class:`Expr` over ``D = dim``.

    ``fields`` lists the declared complex fields; each also admits its
    ``*``-suffixed conjugate.
    """
    if dim < 1:
        raise ValueError("dimension must be positive")
    return _Parser(text, dim, fields).parse()
