"""Scalar term algebra shared by :class:`Expr` components.

A *term poly* is a ``dict`` mapping ``(mass_power, monomial)`` to a :class:`QI`
coefficient, where ``monomial`` is a sorted tuple of :class:`Atom`.  These
helpers never store zero coefficients.
"""

from __future__ import annotations

from typing import Dict, Iterable, NamedTuple, Tuple

from .coeff import QI, as_qi

COORD = "@x"


class Atom(NamedTuple):
    """A field component with an ordered derivative multi-index, or a coordinate.

    ``Atom("phi", (1, 0))`` is ``d_1 d_0 phi`` (the derivative written first is
    stored first).  Coordinates use the reserved field name ``COORD`` and a
    one-element index: ``Atom(COORD, (mu,))`` is ``x^mu``.
    """

    field: str
    index: Tuple[int, ...]

    @property
    def is_coord(self) -> bool:
        return self.field == COORD

    @property
    def order(self) -> int:
        return 0 if self.field == COORD else len(self.index)


def coord(mu: int) -> Atom:
    return Atom(COORD, (mu,))


Key = Tuple[int, Tuple[Atom, ...]]
TermPoly = Dict[Key, QI]


def _acc(out: TermPoly, key: Key, c: QI) -> None:
    prev = out.get(key)
    if prev is None:
        if c:
            out[key] = c
        return
    s = prev + c
    if s:
        out[key] = s
    else:
        del out[key]


def padd(a: TermPoly, b: TermPoly, scale=None) -> TermPoly:
    out = dict(a)
    s = None if scale is None else as_qi(scale)
    for k, c in b.items():
        _acc(out, k, c if s is None else c * s)
    return out


def padd_into(out: TermPoly, b: TermPoly, scale=None, mass_shift: int = 0) -> None:
    s = None if scale is None else as_qi(scale)
    for (mp, mono), c in b.items():
        _acc(out, (mp + mass_shift, mono), c if s is None else c * s)


def pscale(a: TermPoly, c, mass_shift: int = 0) -> TermPoly:
    c = as_qi(c)
    if not c:
        return {}
    return {(mp + mass_shift, mono): v * c for (mp, mono), v in a.items()}


def pmul(a: TermPoly, b: TermPoly) -> TermPoly:
    out: TermPoly = {}
    for (ma, xa), ca in a.items():
        for (mb, xb), cb in b.items():
            _acc(out, (ma + mb, tuple(sorted(xa + xb))), ca * cb)
    return out


def pmul_into(out: TermPoly, a: TermPoly, b: TermPoly, scale=None) -> None:
    s = None if scale is None else as_qi(scale)
    for (ma, xa), ca in a.items():
        if s is not None:
            ca = ca * s
        for (mb, xb), cb in b.items():
            _acc(out, (ma + mb, tuple(sorted(xa + xb))), ca * cb)


def pderiv(a: TermPoly, s: int) -> TermPoly:
    """Total derivative ``d_s`` with the prepend convention on derivative atoms."""
    out: TermPoly = {}
    for (mp, mono), c in a.items():
        for i, atom in enumerate(mono):
            rest = mono[:i] + mono[i + 1:]
            if atom.field == COORD:
                if atom.index[0] == s:
                    _acc(out, (mp, rest), c)
                continue
            new = Atom(atom.field, (s,) + atom.index)
            _acc(out, (mp, tuple(sorted(rest + (new,)))), c)
    return out


def pderiv_chain(a: TermPoly, indices: Iterable[int]) -> TermPoly:
    """Apply ``d_{i0}`` first, then ``d_{i1}``, ... in the given order."""
    for s in indices:
        a = pderiv(a, s)
        if not a:
            break
    return a


def ppartials(a: TermPoly) -> Dict[Atom, TermPoly]:
    """Partial derivatives with respect to every non-coordinate atom present."""
    out: Dict[Atom, TermPoly] = {}
    for (mp, mono), c in a.items():
        seen = set()
        for i, atom in enumerate(mono):
            if atom.field == COORD or atom in seen:
                continue
            seen.add(atom)
            mult = mono.count(atom)
            rest = mono[:i] + mono[i + 1:]
            _acc(out.setdefault(atom, {}), (mp, rest), c * mult if mult > 1 else c)
    return {k: v for k, v in out.items() if v}


def pconj(a: TermPoly, field_map) -> TermPoly:
    out: TermPoly = {}
    for (mp, mono), c in a.items():
        new = tuple(sorted(Atom(field_map(at.field), at.index) for at in mono))
        _acc(out, (mp, new), c.conjugate())
    return out


def psymmetrize(a: TermPoly) -> TermPoly:
    """Sort every derivative multi-index (quotient by commuting derivatives)."""
    out: TermPoly = {}
    for (mp, mono), c in a.items():
        new = tuple(sorted(
            at if at.field == COORD else Atom(at.field, tuple(sorted(at.index)))
            for at in mono))
        _acc(out, (mp, new), c)
    return out


def pzero_fields(a: TermPoly, fields) -> TermPoly:
    fields = set(fields)
    return {k: c for k, c in a.items() if not any(at.field in fields for at in k[1])}


def pfields(a: TermPoly) -> set:
    return {at.field for (_, mono) in a for at in mono if at.field != COORD}
