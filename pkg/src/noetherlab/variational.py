"""Generalized Euler-Lagrange operator and Noether currents for Lagrangians
with derivatives of any finite order.

Conventions
-----------
* ``d_s`` acting on the atom ``d_{m1..mn} Psi`` produces ``d_{s m1..mn} Psi``.
* ``noether_current`` returns the currents normalised so that the density of
  the translation current is the energy density:

  - internal symmetry: ``J^sigma`` with variation ``V = -i T Psi``;
  - translation: ``T_mu^sigma`` with ``V = d_mu Psi`` and the term
    ``-delta^sigma_mu L``;
  - rotation: ``M^sigma_{mu nu}`` with ``V = -i Lambda_{mu nu} Psi`` and the
    term ``-(x_mu delta^sigma_nu - x_nu delta^sigma_mu) L``.

  For every kind, ``d_sigma K^sigma + sum_c EL_c V_c`` vanishes identically
  for an invariant Lagrangian; :func:`divergence_defect` computes it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dc_field
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

from .tensor_expr import (
    COORD, Expr, I, Index, QI, conj_name, parse_expr, symmetrize_derivatives,
)
from .tensor_expr.coeff import as_qi
from .tensor_expr.expr import _from_unsorted, metric_sign
from .tensor_expr.poly import (
    Atom, TermPoly, coord, padd_into, pderiv, pmul_into, ppartials, pscale,
)

__all__ = [
    "LagrangianSpec", "SymmetryVariation", "UnvalidatedSymmetryWarning",
    "euler_lagrange", "apply_variation", "noether_current",
    "noether_current_recursive", "divergence_defect", "variation_of_lagrangian",
]

SIGMA = Index("sigma", True)
MU = Index("mu", False)
NU = Index("nu", False)


class UnvalidatedSymmetryWarning(UserWarning):
    """Rotation pairs involving time (boosts) are computed but not validated."""


@dataclass(frozen=True)
class LagrangianSpec:
    expr: Expr
    fields: Tuple[str, ...]

    def __post_init__(self):
        if self.expr.free:
            raise ValueError(f"Lagrangian must be a scalar, has free indices {self.expr.free_names}")
        unknown = self.expr.fields() - set(self.fields)
        if unknown:
            raise ValueError(f"Lagrangian uses undeclared fields {sorted(unknown)}")

    @classmethod
    def from_text(cls, text: str, dim: int = 4, fields: Sequence[str] = ("phi",)) -> "LagrangianSpec":
        comps = []
        for f in fields:
            base = f[:-1] if f.endswith("*") else f
            comps += [base, base + "*"]
        expr = parse_expr(text, dim, fields)
        return cls(expr, tuple(dict.fromkeys(comps)))

    @property
    def dim(self) -> int:
        return self.expr.dim

    @property
    def max_order(self) -> int:
        return self.expr.max_order()

    def poly(self) -> TermPoly:
        return self.expr.component()

    def __add__(self, other: "LagrangianSpec") -> "LagrangianSpec":
        return LagrangianSpec(self.expr + other.expr, tuple(dict.fromkeys(self.fields + other.fields)))

    def scale(self, c) -> "LagrangianSpec":
        return LagrangianSpec(self.expr.scale(c), self.fields)


@dataclass(frozen=True)
class SymmetryVariation:
    """An infinitesimal symmetry acting on a set of field components.

    ``kind`` is ``"internal"``, ``"translation"`` or ``"rotation"``.  For an
    internal symmetry ``generator[i][j]`` acts on ``base_fields``: the variation
    is ``d phi_i = -i t_ij phi_j`` and ``d phi*_i = +i conj(t_ij) phi*_j``.
    """

    kind: str
    base_fields: Tuple[str, ...] = ()
    generator: Tuple[Tuple[QI, ...], ...] = ()
    pairs: Optional[Tuple[Tuple[int, int], ...]] = None
    validated: bool = True

    @classmethod
    def u1(cls, fields: Sequence[str] = ("phi",)) -> "SymmetryVariation":
        n = len(fields)
        gen = tuple(tuple(QI(1 if i == j else 0) for j in range(n)) for i in range(n))
        return cls("internal", tuple(fields), gen)

    @classmethod
    def internal(cls, fields: Sequence[str], generator) -> "SymmetryVariation":
        gen = tuple(tuple(as_qi(c) for c in row) for row in generator)
        if len(gen) != len(fields) or any(len(r) != len(fields) for r in gen):
            raise ValueError("generator must be square over the base fields")
        return cls("internal", tuple(fields), gen)

    @classmethod
    def translation(cls) -> "SymmetryVariation":
        return cls("translation")

    @classmethod
    def rotation(cls, pairs: Optional[Iterable[Tuple[int, int]]] = None) -> "SymmetryVariation":
        """Spatial rotations by default; pairs touching index 0 are boosts."""
        if pairs is None:
            return cls("rotation", pairs=None, validated=True)
        pairs = tuple((int(a), int(b)) for a, b in pairs)
        validated = all(a != 0 and b != 0 for a, b in pairs)
        if not validated:
            warnings.warn("Lorentz pairs involving time are outside the validated "
                          "(spatial rotation) regime", UnvalidatedSymmetryWarning, stacklevel=2)
        return cls("rotation", pairs=pairs, validated=validated)

    def var_indices(self, dim: int):
        if self.kind == "internal":
            return [()]
        if self.kind == "translation":
            return [(mu,) for mu in range(dim)]
        if self.pairs is not None:
            out = set()
            for a, b in self.pairs:
                out.add((a, b))
                out.add((b, a))
            return sorted(out)
        return [(a, b) for a in range(1, dim) for b in range(1, dim)]

    def var_labels(self) -> Tuple[Index, ...]:
        return {"internal": (), "translation": (MU,), "rotation": (MU, NU)}[self.kind]


def _single(name: str, index=()) -> TermPoly:
    return {(0, (Atom(name, tuple(index)),)): QI(1)}


def _variation_sources(v: SymmetryVariation, fields: Sequence[str], dim: int
                       ) -> Dict[Tuple[int, ...], Dict[str, TermPoly]]:
    """The normalised variation ``V_c`` per variation index and field component."""
    out: Dict[Tuple[int, ...], Dict[str, TermPoly]] = {}
    if v.kind == "internal":
        base = list(v.base_fields)
        per: Dict[str, TermPoly] = {}
        for i, f in enumerate(base):
            vf: TermPoly = {}
            vc: TermPoly = {}
            for j, g in enumerate(base):
                t = v.generator[i][j]
                if t:
                    padd_into(vf, _single(g), -I * t)
                    padd_into(vc, _single(conj_name(g)), I * t.conjugate())
            per[f] = vf
            per[conj_name(f)] = vc
        out[()] = {c: p for c, p in per.items() if c in fields}
        return out
    if v.kind == "translation":
        for mu in range(dim):
            out[(mu,)] = {c: _single(c, (mu,)) for c in fields}
        return out
    if v.kind == "rotation":
        for mu, nu in v.var_indices(dim):
            per = {}
            for c in fields:
                p: TermPoly = {}
                if mu != nu:
                    # -i R_{mu nu} psi = (x_mu d_nu - x_nu d_mu) psi, x_mu = g_{mu mu} x^mu
                    padd_into(p, {(0, tuple(sorted((coord(mu), Atom(c, (nu,)))))): QI(metric_sign(mu))})
                    padd_into(p, {(0, tuple(sorted((coord(nu), Atom(c, (mu,)))))): QI(-metric_sign(nu))})
                per[c] = p
            out[(mu, nu)] = per
        return out
    raise ValueError(f"unknown symmetry kind {v.kind!r}")


def apply_variation(v: SymmetryVariation, fields: Sequence[str], dim: int) -> Dict[str, Expr]:
    """Variation of each field component as an Expr.

    Internal: ``-i T Psi``.  Translation (coefficient of ``b^mu``):
    ``-d_mu Psi``.  Rotation (coefficient of ``eps^{mu nu}/2``):
    ``-i (Lambda_{mu nu} + Sigma_{mu nu}) Psi`` with ``Sigma = 0`` for scalars;
    a pair ``mu == nu`` gives zero.
    """
    src = _variation_sources(v, fields, dim)
    labels = v.var_labels()
    out = {}
    for c in fields:
        comps = {}
        for vidx, per in src.items():
            p = per.get(c, {})
            if v.kind == "translation":
                p = pscale(p, -1)
            if p:
                comps[vidx] = p
        out[c] = _from_unsorted(dim, labels, comps)
    return out


def euler_lagrange(L: LagrangianSpec, field_name: str) -> Expr:
    """``dL/dPsi + sum_n (-1)^n d_{mn}..d_{m1} dL/d(d_{m1..mn} Psi)``."""
    if field_name not in L.fields:
        raise ValueError(f"field {field_name!r} not declared in the Lagrangian")
    out: TermPoly = {}
    for atom, C in ppartials(L.poly()).items():
        if atom.field != field_name:
            continue
        d = C
        for s in atom.index:        # m1 acts first
            d = pderiv(d, s)
        padd_into(out, d, (-1) ** len(atom.index))
    return Expr.scalar(L.dim, out)


class _SuffixCache:
    """``d_{s_0} ... d_{s_{j-1}} V`` for suffix tuples s, built by prepending."""

    def __init__(self, base: TermPoly):
        self.memo = {(): base}

    def get(self, suffix: Tuple[int, ...]) -> TermPoly:
        got = self.memo.get(suffix)
        if got is None:
            got = pderiv(self.get(suffix[1:]), suffix[0])
            self.memo[suffix] = got
        return got


def _lagrangian_term(v: SymmetryVariation, L: LagrangianSpec, raw, dim: int):
    lag = L.poly()
    if v.kind == "translation":
        for mu in range(dim):
            padd_into(raw.setdefault((mu, mu), {}), lag, -1)
    elif v.kind == "rotation":
        for mu, nu in v.var_indices(dim):
            if mu == nu:
                continue
            # -(x_mu delta^sigma_nu - x_nu delta^sigma_mu) L
            xm = {(0, (coord(mu),)): QI(-metric_sign(mu))}
            xn = {(0, (coord(nu),)): QI(metric_sign(nu))}
            pmul_into(raw.setdefault((nu, mu, nu), {}), xm, lag)
            pmul_into(raw.setdefault((mu, mu, nu), {}), xn, lag)


def noether_current(L: LagrangianSpec, v: SymmetryVariation) -> Expr:
    """Closed double-sum form of the conserved current.

    For each atom ``d_{m1..mn} Psi`` of the Lagrangian and ``k = 1..n`` the
    term ``(-1)^(k+1) [d_{m_{k-1}}..d_{m1} dL/d(d_{m1..mn}Psi)] d_{m_{k+1}}..d_{mn} V``
    is added to the component ``sigma = m_k``.
    """
    dim = L.dim
    src = _variation_sources(v, L.fields, dim)
    caches = {(vidx, c): _SuffixCache(p) for vidx, per in src.items() for c, p in per.items() if p}
    raw: Dict[Tuple[int, ...], TermPoly] = {}
    for atom, C in ppartials(L.poly()).items():
        idx = atom.index
        if atom.field == COORD or not idx:
            continue
        n = len(idx)
        X = C
        for k in range(1, n + 1):
            sigma = idx[k - 1]
            sign = 1 if k % 2 else -1
            for vidx in src:
                cache = caches.get((vidx, atom.field))
                if cache is None:
                    continue
                Y = cache.get(idx[k:])
                if Y:
                    pmul_into(raw.setdefault((sigma,) + vidx, {}), X, Y, sign)
            if k < n:
                X = pderiv(X, idx[k - 1])
                if not X:
                    break
    _lagrangian_term(v, L, raw, dim)
    return _from_unsorted(dim, (SIGMA,) + v.var_labels(), raw)


def noether_current_recursive(L: LagrangianSpec, v: SymmetryVariation, check: bool = True) -> Expr:
    """The same current built by repeatedly shifting one derivative to the right.

    Starting from ``-(-1)^n (d_{mn}..d_{m1} C) V`` the Leibniz step
    ``X_j Y_{j+1} = d_{m_j}(X_{j-1} Y_{j+1}) - X_{j-1} Y_j`` is applied until the
    remainder ``-C d_{m1..mn} V`` cancels the explicit term of the variation.
    With ``check`` each Leibniz step is verified exactly.
    """
    dim = L.dim
    src = _variation_sources(v, L.fields, dim)
    raw: Dict[Tuple[int, ...], TermPoly] = {}
    for atom, C in ppartials(L.poly()).items():
        idx = atom.index
        if atom.field == COORD or not idx:
            continue
        n = len(idx)
        xs = [C]
        for j in range(n):
            xs.append(pderiv(xs[-1], idx[j]))
        for vidx, per in src.items():
            V = per.get(atom.field)
            if not V:
                continue
            ys = [None] * (n + 2)          # ys[j] = d_{m_j}..d_{m_n} V, ys[n+1] = V
            ys[n + 1] = V
            for j in range(n, 0, -1):
                ys[j] = pderiv(ys[j + 1], idx[j - 1])
            sign = -((-1) ** n)
            for j in range(n, 0, -1):
                piece: TermPoly = {}
                pmul_into(piece, xs[j - 1], ys[j + 1])
                if check:
                    lhs: TermPoly = {}
                    pmul_into(lhs, xs[j], ys[j + 1])
                    rhs = pderiv(piece, idx[j - 1])
                    pmul_into(rhs, xs[j - 1], ys[j], -1)
                    padd_into(rhs, lhs, -1)
                    if rhs:
                        raise AssertionError(f"Leibniz step failed for {atom} at j={j}")
                padd_into(raw.setdefault((idx[j - 1],) + vidx, {}), piece, sign)
                sign = -sign
            if sign != -1:
                raise AssertionError("recursion remainder does not cancel the variation term")
    _lagrangian_term(v, L, raw, dim)
    return _from_unsorted(dim, (SIGMA,) + v.var_labels(), raw)


def _current_key_order(v: SymmetryVariation):
    # K's free labels are sorted by name; map them back to (sigma, var labels...)
    names = ["sigma"] + [ix.name for ix in v.var_labels()]
    return names


def divergence_defect(L: LagrangianSpec, v: SymmetryVariation, smooth: bool = True,
                      current: Optional[Expr] = None) -> Expr:
    """``d_sigma K^sigma + sum_c EL_c V_c``; zero for an invariant Lagrangian.

    Ordered derivative atoms do not commute, while invariance under
    translations and rotations relates ``d_mu d_I Psi`` to ``d_I d_mu Psi``.
    With ``smooth=True`` (default) the result is projected onto commuting
    derivatives before it is returned; internal symmetries vanish without it.
    A nonzero result is the residual of a non-invariant Lagrangian.
    """
    dim = L.dim
    K = noether_current(L, v) if current is None else current
    order = [K.free_names.index(n) for n in _current_key_order(v)]
    raw: Dict[Tuple[int, ...], TermPoly] = {}
    for comp, poly in K.components().items():
        c = tuple(comp[i] for i in order)
        padd_into(raw.setdefault(c[1:], {}), pderiv(poly, c[0]))
    src = _variation_sources(v, L.fields, dim)
    for c in L.fields:
        el = euler_lagrange(L, c).component()
        if not el:
            continue
        for vidx, per in src.items():
            V = per.get(c)
            if V:
                pmul_into(raw.setdefault(vidx, {}), el, V)
    out = _from_unsorted(dim, v.var_labels(), raw)
    return symmetrize_derivatives(out) if smooth else out


def variation_of_lagrangian(L: LagrangianSpec, v: SymmetryVariation, smooth: bool = True) -> Expr:
    """First-order change of L minus the change required for invariance.

    Internal: ``sum_I dL/dPsi_I d_I V``.  Translation: that minus ``d_mu L``.
    Rotation: that minus ``(x_mu d_nu - x_nu d_mu) L``.  Zero iff L is invariant.
    """
    dim = L.dim
    lag = L.poly()
    src = _variation_sources(v, L.fields, dim)
    raw: Dict[Tuple[int, ...], TermPoly] = {}
    parts = ppartials(lag)
    for vidx, per in src.items():
        acc = raw.setdefault(vidx, {})
        for atom, C in parts.items():
            V = per.get(atom.field)
            if not V:
                continue
            dv = V
            for s in reversed(atom.index):
                dv = pderiv(dv, s)
            pmul_into(acc, C, dv)
        if v.kind == "translation":
            padd_into(acc, pderiv(lag, vidx[0]), -1)
        elif v.kind == "rotation":
            mu, nu = vidx
            if mu != nu:
                pmul_into(acc, {(0, (coord(mu),)): QI(metric_sign(mu))}, pderiv(lag, nu), -1)
                pmul_into(acc, {(0, (coord(nu),)): QI(metric_sign(nu))}, pderiv(lag, mu))
    out = _from_unsorted(dim, v.var_labels(), raw)
    return symmetrize_derivatives(out) if smooth else out
