"""The square-root (non-local) scalar model.

Dispersion series ``sqrt(m^2 - x) = sum_l f_l(m) x^l``, the two-sided kernel
that resums the derivative series of the current, momentum-space currents
with their Ward identity, the truncated Lagrangian as a symbolic Expr, the
explicit derivative-series currents, and the minimal-substitution current.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .tensor_expr import COORD, Expr, I, Index, QI, conj_name
from .tensor_expr.expr import _from_unsorted, metric_sign, set_fields_zero
from .tensor_expr.poly import Atom, TermPoly, coord, padd_into, pconj, pderiv, pmul_into
from .variational import SIGMA, MU, NU, LagrangianSpec, euler_lagrange

__all__ = [
    "MAX_SYMBOLIC_ORDER", "series_coeff", "series_coeff_value", "coefficient_table",
    "truncated_sqrt", "two_sided_kernel", "two_sided_kernel_closed", "energy",
    "current_momentum", "emt_momentum", "inverse_propagator", "ward_defect",
    "ward_defect_exact", "alternative_covariant_current", "truncated_model_lagrangian",
    "series_vector_current", "series_emt", "series_angular_momentum",
    "gauged_functional_derivative", "spatial_part",
]

MAX_SYMBOLIC_ORDER = 4
PHI, PHIC = "phi", "phi*"


# ---------------------------------------------------------------------------
# dispersion series

@lru_cache(maxsize=None)
def _ratio(l: int) -> Fraction:
    """Rational part r_l of f_l(m) = r_l m^(1-2l)."""
    if l < 0:
        raise ValueError("l must be non-negative")
    r = Fraction(1)
    for j in range(l):
        r *= Fraction(2 * j - 1, 2 * (j + 1))
    return r


def series_coeff(l: int) -> Tuple[Fraction, int]:
    """``f_l(m)`` as ``(r_l, 1 - 2l)`` meaning ``r_l * m**(1 - 2l)``.

    Recurrence ``f_{l+1} = f_l (2l-1) / (2(l+1)) / m^2`` from ``f_0 = m``.
    """
    return _ratio(l), 1 - 2 * l


def series_coeff_value(m: float, l: int) -> float:
    r, p = series_coeff(l)
    return float(r) * m ** p


def coefficient_table(L: int) -> List[Tuple[int, int, int, int]]:
    """Rows ``(l, numerator, denominator, m_power)`` for l = 0..L."""
    rows = []
    for l in range(L + 1):
        r, p = series_coeff(l)
        rows.append((l, r.numerator, r.denominator, p))
    return rows


def truncated_sqrt(m: float, x: float, L: int) -> float:
    """``sum_{l<=L} f_l(m) x^l``; converges to ``sqrt(m^2 - x)`` for ``|x| < m^2``."""
    u = x / (m * m)
    total, term = 0.0, 1.0
    for l in range(L + 1):
        total += float(_ratio(l)) * term
        term *= u
    return m * total


def two_sided_kernel(m: float, x: float, y: float, L: int) -> float:
    """``sum_{l=1}^{L} f_l sum_{k=1}^{l} x^(k-1) y^(l-k)`` without division.

    The inner sums obey ``h_{l+1} = y h_l + x^l`` with ``h_1 = 1``.
    """
    total, h, xp = 0.0, 1.0, 1.0
    for l in range(1, L + 1):
        total += series_coeff_value(m, l) * h
        xp *= x
        h = y * h + xp
    return total


def two_sided_kernel_closed(m: float, x: float, y: float) -> float:
    """``-1 / (sqrt(m^2 - x) + sqrt(m^2 - y))``."""
    if x >= m * m or y >= m * m:
        raise ValueError("closed kernel requires x, y < m^2")
    return -1.0 / (math.sqrt(m * m - x) + math.sqrt(m * m - y))


def _check_domain(m: float, *xs: float) -> None:
    for x in xs:
        if abs(x) >= m * m:
            raise ValueError(f"series argument {x} outside the convergence domain |x| < m^2 = {m * m}")


# ---------------------------------------------------------------------------
# momentum space

def energy(p, m: float) -> float:
    p = np.asarray(p, dtype=float)
    return float(np.sqrt(p @ p + m * m))


def current_momentum(pp, p, m: float) -> np.ndarray:
    """``(1, (p' + p) / (E(p') + E(p)))``."""
    pp, p = np.asarray(pp, float), np.asarray(p, float)
    ep, e = energy(pp, m), energy(p, m)
    return np.concatenate([[1.0], (pp + p) / (ep + e)])


def emt_momentum(pp, p, m: float) -> np.ndarray:
    """``T[mu, sigma] = J^sigma * (p' + p)_mu / 2`` with ``(p'+p)_0 = E' + E``.

    The lower spatial components carry the metric sign.
    """
    pp, p = np.asarray(pp, float), np.asarray(p, float)
    j = current_momentum(pp, p, m)
    low = np.concatenate([[energy(pp, m) + energy(p, m)], -(pp + p)])
    return 0.5 * np.outer(low, j)


def inverse_propagator(p0: float, p, m: float) -> float:
    return p0 - energy(p, m)


def ward_defect(pp, p, p0p: float, p0: float, m: float) -> float:
    """``(p' - p)_sigma J^sigma - [G^{-1}(p') - G^{-1}(p)]``; zero off shell."""
    pp, p = np.asarray(pp, float), np.asarray(p, float)
    j = current_momentum(pp, p, m)
    contraction = (p0p - p0) * j[0] - (pp - p) @ j[1:]
    return contraction - (inverse_propagator(p0p, pp, m) - inverse_propagator(p0, p, m))


def ward_defect_exact(pp: Fraction, p: Fraction, p0p: Fraction, p0: Fraction, m: Fraction):
    """The d = 1 Ward defect in exact arithmetic (energies kept as radicals)."""
    import sympy as sp

    pp, p, p0p, p0, m = (sp.Rational(v) for v in (pp, p, p0p, p0, m))
    ep, e = sp.sqrt(pp ** 2 + m ** 2), sp.sqrt(p ** 2 + m ** 2)
    j0, j1 = sp.Integer(1), (pp + p) / (ep + e)
    defect = (p0p - p0) * j0 - (pp - p) * j1 - ((p0p - ep) - (p0 - e))
    return sp.simplify(sp.radsimp(defect))


def alternative_covariant_current(pp, p, m: float) -> np.ndarray:
    """``(p' + p)^sigma / sqrt(2E(p') 2E(p))`` with on-shell energies."""
    pp, p = np.asarray(pp, float), np.asarray(p, float)
    ep, e = energy(pp, m), energy(p, m)
    vec = np.concatenate([[ep + e], pp + p])
    return vec / math.sqrt(4.0 * ep * e)


# ---------------------------------------------------------------------------
# symbolic model

def _f_poly(l: int, scale: QI = QI(1)) -> TermPoly:
    r, p = series_coeff(l)
    c = QI(r) * scale
    return {(p, ()): c} if c else {}


def _laplacian_indices(l: int, d: int):
    for pairs in itertools.product(range(1, d + 1), repeat=l):
        yield tuple(a for a in pairs for _ in (0, 1))


def _one(name: str, index=()) -> TermPoly:
    return {(0, (Atom(name, tuple(index)),)): QI(1)}


def _mono(c: QI, *atoms: Atom, mass_power: int = 0) -> TermPoly:
    return {(mass_power, tuple(sorted(atoms))): c}


def _with_cc(p: TermPoly, real=()) -> TermPoly:
    fmap = lambda f: f if (f == COORD or f in real) else conj_name(f)
    out = dict(p)
    padd_into(out, pconj(p, fmap))
    return out


def _guard(L: int, limit: int = MAX_SYMBOLIC_ORDER) -> None:
    if L < 0:
        raise ValueError("truncation order must be non-negative")
    if L > limit:
        raise ValueError(f"truncation order {L} exceeds the symbolic size guard ({limit}); "
                         f"the term count grows like d^L")


def truncated_model_lagrangian(L: int, d: int = 3) -> LagrangianSpec:
    """``1/2 (phi* i d_t phi - sum_{l<=L} f_l phi* Lap^l phi) + c.c.``

    ``Lap^l`` is written out as ``d_a1 d_a1 ... d_al d_al`` summed over
    spatial values; the mass stays symbolic.
    """
    _guard(L)
    half = QI(Fraction(1, 2))
    p: TermPoly = {}
    padd_into(p, _mono(half * I, Atom(PHIC, ()), Atom(PHI, (0,))))
    for l in range(L + 1):
        r, mp = series_coeff(l)
        for idx in _laplacian_indices(l, d):
            padd_into(p, _mono(-half * QI(r), Atom(PHIC, ()), Atom(PHI, idx), mass_power=mp))
    return LagrangianSpec(Expr.scalar(d + 1, _with_cc(p)), (PHI, PHIC))


def _series_terms(L: int, d: int):
    """Yield ``(l, k, alpha, star_index, phi_index, sign)`` of the explicit series.

    For ``Lap^l = d_a1 d_a1 ... d_al d_al`` the slot ``k`` (1-based) carries the
    free value ``alpha``; ``phi*`` receives the slots before ``k`` in reverse,
    ``phi`` the slots after it.  ``sign`` is ``+1`` for odd ``k``.
    """
    for l in range(1, L + 1):
        for k in range(1, 2 * l + 1):
            pair = (k - 1) // 2
            for alpha in range(1, d + 1):
                for rest in itertools.product(range(1, d + 1), repeat=l - 1):
                    vals = list(rest[:pair]) + [alpha] + list(rest[pair:])
                    seq = [v for v in vals for _ in (0, 1)]
                    yield (l, k, alpha, tuple(reversed(seq[:k - 1])), tuple(seq[k:]),
                           1 if k % 2 else -1)


def spatial_part(K: Expr, label: str = "sigma") -> Expr:
    """Keep only the components whose ``label`` value is spatial (>= 1)."""
    pos = K.free_names.index(label)
    comps = {c: p for c, p in K.components().items() if c[pos] >= 1}
    return _from_unsorted(K.dim, K.free, comps)


def series_vector_current(L: int, d: int = 3) -> Expr:
    """Spatial components ``J^alpha`` of the truncated derivative series."""
    _guard(L)
    half_i = QI(0, Fraction(1, 2))
    raw: Dict[Tuple[int, ...], TermPoly] = {}
    for l, k, alpha, si, pi, sign in _series_terms(L, d):
        r, mp = series_coeff(l)
        term = _mono(half_i * QI(r * sign), Atom(PHIC, si), Atom(PHI, pi), mass_power=mp)
        padd_into(raw.setdefault((alpha,), {}), _with_cc(term))
    return _from_unsorted(d + 1, (SIGMA,), raw)


def _lagrangian_poly(L: int, d: int) -> TermPoly:
    return truncated_model_lagrangian(L, d).expr.component()


def series_emt(L: int, d: int = 3, include_lagrangian: bool = True) -> Expr:
    """Spatial rows ``T_mu^alpha`` of the truncated derivative series.

    With ``include_lagrangian`` the ``-delta^alpha_mu L`` term (which vanishes
    on shell) is added so the result can be compared off shell.
    """
    _guard(L)
    half = QI(Fraction(1, 2))
    D = d + 1
    raw: Dict[Tuple[int, ...], TermPoly] = {}
    for l, k, alpha, si, pi, sign in _series_terms(L, d):
        r, mp = series_coeff(l)
        for mu in range(D):
            term = _mono(-half * QI(r * sign), Atom(PHIC, si), Atom(PHI, pi + (mu,)), mass_power=mp)
            padd_into(raw.setdefault((mu, alpha), {}), _with_cc(term))
    if include_lagrangian:
        lag = _lagrangian_poly(L, d)
        for a in range(1, D):
            padd_into(raw.setdefault((a, a), {}), lag, -1)
    return _from_unsorted(D, (MU, SIGMA), raw)


def _rotated_phi(a: int, b: int, name: str = PHI) -> TermPoly:
    """``R_ab phi = x_a i d_b phi - x_b i d_a phi`` with ``x_a = g_aa x^a``."""
    p: TermPoly = {}
    if a != b:
        padd_into(p, _mono(I * metric_sign(a), coord(a), Atom(name, (b,))))
        padd_into(p, _mono(-I * metric_sign(b), coord(b), Atom(name, (a,))))
    return p


def series_angular_momentum(L: int, d: int = 3, include_lagrangian: bool = True) -> Expr:
    """Spatial components ``M^gamma_{ab}`` (a, b spatial) of the derivative series."""
    _guard(L)
    half_i = QI(0, Fraction(1, 2))
    D = d + 1
    raw: Dict[Tuple[int, ...], TermPoly] = {}
    rot = {(a, b): _rotated_phi(a, b) for a in range(1, D) for b in range(1, D)}
    for l, k, gamma, si, pi, sign in _series_terms(L, d):
        r, mp = series_coeff(l)
        star = _mono(half_i * QI(r * sign), Atom(PHIC, si), mass_power=mp)
        for (a, b), rp in rot.items():
            if not rp:
                continue
            dr = rp
            for s in reversed(pi):
                dr = pderiv(dr, s)
            term: TermPoly = {}
            pmul_into(term, star, dr)
            padd_into(raw.setdefault((a, b, gamma), {}), _with_cc(term))
    if include_lagrangian:
        lag = _lagrangian_poly(L, d)
        for a in range(1, D):
            for b in range(1, D):
                if a == b:
                    continue
                # -(x_a delta^gamma_b - x_b delta^gamma_a) L
                pmul_into(raw.setdefault((a, b, b), {}), _mono(QI(-metric_sign(a)), coord(a)), lag)
                pmul_into(raw.setdefault((a, b, a), {}), _mono(QI(metric_sign(b)), coord(b)), lag)
    return _from_unsorted(D, (MU, NU, SIGMA), raw)


def _a_degree(mono) -> int:
    return sum(1 for a in mono if a.field.startswith("A"))


def _prune(p: TermPoly, max_deg: int = 1) -> TermPoly:
    return {k: c for k, c in p.items() if _a_degree(k[1]) <= max_deg}


def gauged_lagrangian(L: int, d: int = 3) -> Tuple[LagrangianSpec, Tuple[str, ...]]:
    """The truncated model with ``i d_t -> i d_t - A^0`` and ``p -> p - A``.

    ``(p - A)^{2l}`` is expanded as an ordered operator product acting on phi
    (``p^a = -i d_a``, ``A^a`` a multiplication operator).  Terms of second
    or higher order in A are dropped: they do not contribute to the first
    functional derivative at A = 0.
    """
    _guard(L, 2)
    D = d + 1
    afields = tuple(f"A{mu}" for mu in range(D))
    half = QI(Fraction(1, 2))
    p: TermPoly = {}
    padd_into(p, _mono(half * I, Atom(PHIC, ()), Atom(PHI, (0,))))
    padd_into(p, _mono(-half, Atom(PHIC, ()), Atom(PHI, ()), Atom(afields[0], ())))
    for l in range(L + 1):
        # (p - A)^{2l} = prod over l factors of sum_a (p^a - A^a)(p^a - A^a)
        cur = _one(PHI)
        for _ in range(l):
            nxt: TermPoly = {}
            for a in range(1, D):
                inner = _apply_pa(cur, a, afields[a])
                padd_into(nxt, _apply_pa(inner, a, afields[a]))
            cur = _prune(nxt)
        r, mp = series_coeff(l)
        sign = QI((-1) ** l)
        coef = {(mp, (Atom(PHIC, ()),)): -half * QI(r) * sign}
        pmul_into(p, coef, cur)
    full = _prune(_with_cc(p, real=afields))
    return LagrangianSpec(Expr.scalar(D, full), (PHI, PHIC) + afields), afields


def _apply_pa(x: TermPoly, a: int, afield: str) -> TermPoly:
    """``(p^a - A^a) x`` with ``p^a = -i d_a``."""
    out: TermPoly = {}
    padd_into(out, pderiv(x, a), -I)
    pmul_into(out, _one(afield), x, -1)
    return _prune(out)


def gauged_functional_derivative(L: int, d: int = 3) -> Expr:
    """Current ``J^sigma`` read off the gauged action at ``A = 0``.

    ``J^0 = -dS/dA^0`` and ``J^a = +dS/dA^a`` (``A_a = -A^a``), both taken
    with the higher-order Euler-Lagrange operator, i.e. term-wise functional
    differentiation with integration by parts.
    """
    spec, afields = gauged_lagrangian(L, d)
    raw: Dict[Tuple[int, ...], TermPoly] = {}
    for mu, af in enumerate(afields):
        el = set_fields_zero(euler_lagrange(spec, af), afields).component()
        padd_into(raw.setdefault((mu,), {}), el, -1 if mu == 0 else 1)
    return _from_unsorted(d + 1, (SIGMA,), raw)
