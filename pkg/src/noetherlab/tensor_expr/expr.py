"""Tensor expressions in fields and their ordered higher derivatives.

An :class:`Expr` is stored fully resolved over a concrete spacetime dimension
``D``: every free index label is enumerated over ``0..D-1`` and each component
holds a sum of terms ``coefficient * m**e * (product of atoms)``.  Summed labels
and metric/delta factors are contracted away when the expression is built, so
the stored form is a normal form.  Derivative multi-indices keep the order in
which the derivatives were written.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

from .coeff import ONE, QI, as_qi
from .poly import (
    COORD, Atom, TermPoly, _acc, coord, padd_into, pconj, pderiv, pmul_into,
    ppartials, pscale, psymmetrize, pzero_fields,
)

__all__ = [
    "Index", "IndexError_", "Expr", "metric_sign", "field", "coordinate",
    "metric", "delta", "constant", "mass", "total_derivative", "deriv_wrt_atom",
    "canonicalize", "conjugate", "symmetrize_derivatives", "conj_name",
]


class IndexError_(ValueError):
    """Inconsistent index structure (collision, mismatch, unbound label)."""


@dataclass(frozen=True, order=True)
class Index:
    """A named index label; ``up`` records its variance.

    Concrete index values are plain ``int`` wherever an index is accepted.
    """

    name: str
    up: bool = False

    def __str__(self):
        return ("^" if self.up else "_") + self.name


IndexArg = Union[Index, int]
Comp = Tuple[int, ...]


def metric_sign(mu: int) -> int:
    """Diagonal entry of the time-like metric diag(+1, -1, ..., -1)."""
    return 1 if mu == 0 else -1


def conj_name(name: str) -> str:
    return name[:-1] if name.endswith("*") else name + "*"


class Expr:
    """Canonical tensor expression.  Instances are immutable by convention."""

    __slots__ = ("dim", "free", "_comps")

    def __init__(self, dim: int, free: Sequence[Index] = (), comps: Optional[Mapping] = None):
        free = tuple(free)
        names = [ix.name for ix in free]
        if len(set(names)) != len(names):
            raise IndexError_(f"repeated free label in {names}")
        order = sorted(range(len(free)), key=lambda i: free[i].name)
        sfree = tuple(free[i] for i in order)
        out: Dict[Comp, TermPoly] = {}
        for comp, poly in (comps or {}).items():
            comp = tuple(comp)
            if len(comp) != len(free):
                raise IndexError_(f"component {comp} does not match free labels {names}")
            if any(not 0 <= v < dim for v in comp):
                raise IndexError_(f"component {comp} out of range for D={dim}")
            key = tuple(comp[i] for i in order)
            tgt = out.setdefault(key, {})
            for k, c in poly.items():
                _acc(tgt, (k[0], tuple(sorted(k[1]))), as_qi(c))
        self.dim = dim
        self.free = sfree
        self._comps = {k: dict(sorted(out[k].items())) for k in sorted(out) if out[k]}

    # construction helpers ------------------------------------------------------
    @classmethod
    def _trusted(cls, dim: int, free: Tuple[Index, ...], comps: Dict[Comp, TermPoly]) -> "Expr":
        # caller guarantees sorted free labels and canonical monomials
        obj = object.__new__(cls)
        obj.dim = dim
        obj.free = free
        obj._comps = {k: dict(sorted(comps[k].items())) for k in sorted(comps) if comps[k]}
        return obj

    @classmethod
    def scalar(cls, dim: int, poly: TermPoly) -> "Expr":
        return cls._trusted(dim, (), {(): poly})

    @classmethod
    def zero(cls, dim: int, free: Sequence[Index] = ()) -> "Expr":
        return cls(dim, free, {})

    # accessors -----------------------------------------------------------------
    @property
    def free_names(self) -> Tuple[str, ...]:
        return tuple(ix.name for ix in self.free)

    def components(self) -> Dict[Comp, TermPoly]:
        return {k: dict(v) for k, v in self._comps.items()}

    def component(self, *values: int, **by_name: int) -> TermPoly:
        comp = self._resolve(values, by_name)
        return dict(self._comps.get(comp, {}))

    def _resolve(self, values, by_name) -> Comp:
        if by_name:
            if values:
                raise TypeError("give component values positionally or by name, not both")
            missing = [n for n in self.free_names if n not in by_name]
            if missing:
                raise IndexError_(f"unbound free index {missing}")
            return tuple(by_name[n] for n in self.free_names)
        if len(values) != len(self.free):
            raise IndexError_(f"expected {len(self.free)} index values, got {len(values)}")
        return tuple(values)

    def restrict(self, **values: int) -> "Expr":
        """Bind some free labels to concrete values."""
        keep = [i for i, ix in enumerate(self.free) if ix.name not in values]
        bound = {i: values[ix.name] for i, ix in enumerate(self.free) if ix.name in values}
        comps = {}
        for comp, poly in self._comps.items():
            if all(comp[i] == v for i, v in bound.items()):
                comps[tuple(comp[i] for i in keep)] = poly
        return Expr._trusted(self.dim, tuple(self.free[i] for i in keep), comps)

    def data(self):
        """Nested tuples of the canonical storage (used for identity checks)."""
        return (self.dim, self.free, tuple((k, tuple(v.items())) for k, v in self._comps.items()))

    def is_zero(self) -> bool:
        return not self._comps

    def n_terms(self) -> int:
        return sum(len(v) for v in self._comps.values())

    def atoms(self) -> set:
        return {at for poly in self._comps.values() for (_, mono) in poly for at in mono}

    def fields(self) -> set:
        return {at.field for at in self.atoms() if at.field != COORD}

    def max_order(self) -> int:
        return max((at.order for at in self.atoms()), default=0)

    # algebra -------------------------------------------------------------------
    def _check_compat(self, other: "Expr"):
        if self.dim != other.dim:
            raise IndexError_(f"dimension mismatch {self.dim} vs {other.dim}")
        if self.free != other.free:
            raise IndexError_(f"free index mismatch {self.free} vs {other.free}")

    def __add__(self, other):
        if isinstance(other, Expr):
            self._check_compat(other)
            comps = self.components()
            for k, poly in other._comps.items():
                padd_into(comps.setdefault(k, {}), poly)
            return Expr._trusted(self.dim, self.free, comps)
        return self + constant(self.dim, other) if not self.free else NotImplemented

    def __radd__(self, other):
        return self + other

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        if isinstance(other, Expr):
            return self + other.scale(-1)
        return self + (-as_qi(other))

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c, mass_power: int = 0) -> "Expr":
        c = as_qi(c)
        return Expr._trusted(self.dim, self.free,
                             {k: pscale(v, c, mass_power) for k, v in self._comps.items()})

    def __mul__(self, other):
        if isinstance(other, Expr):
            return self.product(other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def product(self, other: "Expr", contract: Iterable[Tuple[str, str]] = ()) -> "Expr":
        """Outer product, contracting the given (self label, other label) pairs.

        A contraction is a plain sum over the shared value; variance bookkeeping
        is the caller's responsibility (the parser enforces upper/lower pairing).
        """
        if self.dim != other.dim:
            raise IndexError_("dimension mismatch in product")
        pairs = list(contract)
        a_pos = {ix.name: i for i, ix in enumerate(self.free)}
        b_pos = {ix.name: i for i, ix in enumerate(other.free)}
        for na, nb in pairs:
            if na not in a_pos or nb not in b_pos:
                raise IndexError_(f"cannot contract {na!r} with {nb!r}")
        ca = {a_pos[na] for na, _ in pairs}
        cb = {b_pos[nb] for _, nb in pairs}
        keep_a = [i for i in range(len(self.free)) if i not in ca]
        keep_b = [i for i in range(len(other.free)) if i not in cb]
        new_free = [self.free[i] for i in keep_a] + [other.free[i] for i in keep_b]
        names = [ix.name for ix in new_free]
        if len(set(names)) != len(names):
            raise IndexError_(f"index capture: labels {names} collide in product")
        a_key = [a_pos[na] for na, _ in pairs]
        b_key = [b_pos[nb] for _, nb in pairs]
        groups: Dict[Comp, list] = {}
        for kb, pb in other._comps.items():
            groups.setdefault(tuple(kb[i] for i in b_key), []).append((kb, pb))
        raw: Dict[Comp, TermPoly] = {}
        for ka, pa in self._comps.items():
            for kb, pb in groups.get(tuple(ka[i] for i in a_key), ()):
                comp = tuple(ka[i] for i in keep_a) + tuple(kb[i] for i in keep_b)
                pmul_into(raw.setdefault(comp, {}), pa, pb)
        return _from_unsorted(self.dim, new_free, raw)

    def contract(self, a: str, b: str) -> "Expr":
        """Sum over the diagonal ``a == b`` of two free labels of this expression."""
        pa, pb = self.free_names.index(a), self.free_names.index(b)
        keep = [i for i in range(len(self.free)) if i not in (pa, pb)]
        raw: Dict[Comp, TermPoly] = {}
        for comp, poly in self._comps.items():
            if comp[pa] == comp[pb]:
                padd_into(raw.setdefault(tuple(comp[i] for i in keep), {}), poly)
        return Expr._trusted(self.dim, tuple(self.free[i] for i in keep), raw)

    def rename(self, mapping: Mapping[str, Union[str, Index]]) -> "Expr":
        new_free = []
        for ix in self.free:
            tgt = mapping.get(ix.name, ix)
            new_free.append(Index(tgt, ix.up) if isinstance(tgt, str) else tgt)
        return _from_unsorted(self.dim, new_free, self._comps)

    def map_terms(self, fn) -> "Expr":
        return Expr._trusted(self.dim, self.free, {k: fn(v) for k, v in self._comps.items()})

    # comparison ------------------------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, Expr):
            return NotImplemented
        return self.data() == other.data()

    def __hash__(self):
        return hash(self.data())

    def __repr__(self):
        return f"Expr(D={self.dim}, free={[str(i) for i in self.free]}, terms={self.n_terms()})"

    def __str__(self):
        from .render import render
        return render(self)


def _from_unsorted(dim: int, free: Sequence[Index], comps: Mapping[Comp, TermPoly]) -> Expr:
    free = tuple(free)
    order = sorted(range(len(free)), key=lambda i: free[i].name)
    if order == list(range(len(free))):
        return Expr._trusted(dim, free, dict(comps))
    return Expr._trusted(dim, tuple(free[i] for i in order),
                         {tuple(k[i] for i in order): v for k, v in comps.items()})


# elementary builders ---------------------------------------------------------
def _as_index(ix: IndexArg, up: bool) -> Index:
    if isinstance(ix, Index):
        return ix
    if isinstance(ix, str):
        return Index(ix, up)
    raise TypeError(f"not an index label: {ix!r}")


def constant(dim: int, c, mass_power: int = 0) -> Expr:
    c = as_qi(c)
    return Expr.scalar(dim, {(mass_power, ()): c} if c else {})


def mass(dim: int, power: int = 1) -> Expr:
    return constant(dim, 1, power)


def field(dim: int, name: str, *derivs: int) -> Expr:
    """``field(4, "phi", 1, 0)`` is the scalar atom ``d_1 d_0 phi``."""
    if any(not 0 <= s < dim for s in derivs):
        raise IndexError_(f"derivative index out of range for D={dim}")
    return Expr.scalar(dim, {(0, (Atom(name, tuple(derivs)),)): ONE})


def coordinate(dim: int, mu: IndexArg, lower: bool = False) -> Expr:
    """``x^mu`` (or ``x_mu = g_{mu mu} x^mu`` with ``lower=True``)."""
    if isinstance(mu, int):
        c = metric_sign(mu) if lower else 1
        return Expr.scalar(dim, {(0, (coord(mu),)): as_qi(c)})
    ix = _as_index(mu, not lower)
    comps = {(v,): {(0, (coord(v),)): as_qi(metric_sign(v) if lower else 1)} for v in range(dim)}
    return Expr(dim, (ix,), comps)


def metric(dim: int, a: IndexArg, b: IndexArg, up: bool = True) -> Expr:
    """The metric diag(+1,-1,...); numerically identical upstairs and downstairs."""
    a, b = _as_index(a, up), _as_index(b, up)
    return Expr(dim, (a, b), {(v, v): {(0, ()): as_qi(metric_sign(v))} for v in range(dim)})


def delta(dim: int, upper: IndexArg, lower: IndexArg) -> Expr:
    a, b = _as_index(upper, True), _as_index(lower, False)
    return Expr(dim, (a, b), {(v, v): {(0, ()): ONE} for v in range(dim)})


# calculus ---------------------------------------------------------------------
def total_derivative(e: Expr, sigma: IndexArg) -> Expr:
    """``d_sigma e`` by the Leibniz rule.

    ``d_s`` acting on the atom ``d_{m1..mn} Psi`` gives ``d_{s m1..mn} Psi``
    (the new derivative is prepended); on ``x^mu`` it gives ``delta^mu_s``.
    A label argument adds a new free lower index; an ``int`` is a concrete one.
    """
    if isinstance(sigma, int):
        if not 0 <= sigma < e.dim:
            raise IndexError_(f"derivative index {sigma} out of range")
        return e.map_terms(lambda p: pderiv(p, sigma))
    ix = _as_index(sigma, False)
    if ix.name in e.free_names:
        raise IndexError_(f"index capture: label {ix.name!r} already used in expression")
    raw = {}
    for comp, poly in e._comps.items():
        for s in range(e.dim):
            d = pderiv(poly, s)
            if d:
                raw[comp + (s,)] = d
    return _from_unsorted(e.dim, e.free + (ix,), raw)


def deriv_wrt_atom(e: Expr, field_name: str, pattern: Sequence[IndexArg]) -> Expr:
    """Partial derivative with respect to the atom ``d_{p1..pn} field``.

    The pattern entries are fresh labels (new upper free indices) or concrete
    values.  Only atoms of the same field and the same derivative order
    contribute, each giving the ordered product of Kronecker deltas; no
    symmetrisation over the pattern is performed.
    """
    labels = [(i, p) for i, p in enumerate(pattern) if not isinstance(p, int)]
    label_ix = [_as_index(p, True) for _, p in labels]
    for ix in label_ix:
        if ix.name in e.free_names:
            raise IndexError_(f"pattern label {ix.name!r} is not fresh")
    n = len(pattern)
    raw: Dict[Comp, TermPoly] = {}
    for comp, poly in e._comps.items():
        parts = ppartials(poly)
        for atom, dpoly in parts.items():
            if atom.field != field_name or len(atom.index) != n:
                continue
            if any(atom.index[i] != p for i, p in enumerate(pattern) if isinstance(p, int)):
                continue
            key = comp + tuple(atom.index[i] for i, _ in labels)
            padd_into(raw.setdefault(key, {}), dpoly)
    return _from_unsorted(e.dim, e.free + tuple(label_ix), raw)


def canonicalize(e: Expr) -> Expr:
    """Rebuild ``e`` from its components (sorted, merged, zero-free).  Idempotent."""
    return Expr(e.dim, e.free, e._comps)


def conjugate(e: Expr, real: Iterable[str] = ()) -> Expr:
    """Complex conjugate: conjugates coefficients and swaps ``phi`` with ``phi*``.

    Fields listed in ``real`` are their own conjugates.
    """
    real = set(real)
    fmap = lambda f: f if (f == COORD or f in real) else conj_name(f)
    return e.map_terms(lambda p: pconj(p, fmap))


def symmetrize_derivatives(e: Expr) -> Expr:
    """Project onto commuting derivatives by sorting every multi-index.

    Used where an identity only holds for smooth fields (derivatives commute);
    the ordered representation itself is never altered elsewhere.
    """
    return e.map_terms(psymmetrize)


def set_fields_zero(e: Expr, fields: Iterable[str]) -> Expr:
    fields = tuple(fields)
    return e.map_terms(lambda p: pzero_fields(p, fields))


def expand_components(dim: int, free: Sequence[Index], fn) -> Expr:
    """Build an Expr by calling ``fn(*values)`` -> TermPoly for every component."""
    free = tuple(free)
    raw = {}
    for comp in itertools.product(range(dim), repeat=len(free)):
        p = fn(*comp)
        if p:
            raw[comp] = p
    return _from_unsorted(dim, free, raw)
