"""The twelve acceptance checks, shared by ``noetherlab verify`` and the tests.

Each check returns a :class:`CheckResult`; tolerances are multiplied by
``tol_scale`` and randomised inputs are drawn from ``seed``.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional

import numpy as np
import sympy as sp

from . import nonlocal_model as nm
from . import spectral_sim as ss
from .lagrangians import KLEIN_GORDON, SHIPPED
from .tensor_expr import (
    Expr, Index, Polynomial, deriv_wrt_atom, delta, eval_polynomial, field,
    parse_expr, total_derivative,
)
from .variational import (
    LagrangianSpec, SymmetryVariation, apply_variation, divergence_defect,
    noether_current,
)


@dataclass
class CheckResult:
    number: int
    key: str
    title: str
    passed: bool
    detail: str
    seconds: float
    budget: Optional[float] = None

    @property
    def within_budget(self) -> bool:
        return self.budget is None or self.seconds <= self.budget

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        budget = f" (budget {self.budget:g}s)" if self.budget else ""
        return f"{status} [{self.number:2d}] {self.title}: {self.detail} [{self.seconds:.2f}s{budget}]"


# ---------------------------------------------------------------------------
# oracles

def taylor_coefficients(L: int) -> List[Fraction]:
    """Rational Taylor coefficients of sqrt(1 - x) from sympy."""
    x = sp.symbols("x")
    ser = sp.series(sp.sqrt(1 - x), x, 0, L + 1).removeO()
    poly = sp.Poly(ser, x)
    return [Fraction(int(sp.fraction(c)[0]), int(sp.fraction(c)[1]))
            for c in (poly.coeff_monomial(x ** l) for l in range(L + 1))]


def classical_current(L: LagrangianSpec, v: SymmetryVariation) -> Expr:
    """First-order Noether formula ``dL/d(d_sigma Psi) V - (trivial term) L``.

    Built from :func:`deriv_wrt_atom`, tensor products and contractions only.
    """
    dim = L.dim
    sigma = Index("sigma", True)
    var = apply_variation(v, L.fields, dim)
    total = None
    for c in L.fields:
        p = deriv_wrt_atom(L.expr, c, [Index("sigma", True)])
        if v.kind == "translation":
            vc = total_derivative(field(dim, c), Index("mu", False))
        else:
            vc = var[c]
        term = p.product(vc)
        total = term if total is None else total + term
    if v.kind == "translation":
        total = total - delta(dim, sigma, Index("mu", False)).product(L.expr)
    return total


def klein_gordon_emt_by_hand(dim: int = 4) -> Expr:
    """``d^sigma phi* d_mu phi + d_mu phi* d^sigma phi - delta^sigma_mu L`` in the DSL."""
    text = ("g[sigma,nu] d[nu] phi* d[mu] phi + d[mu] phi* g[sigma,nu] d[nu] phi"
            " - g[sigma,r] g[r,mu] g[a,b] d[a] phi* d[b] phi + m^2 g[sigma,r] g[r,mu] phi* phi")
    e = parse_expr(text, dim)
    return e.rename({"sigma": Index("sigma", True), "mu": Index("mu", False)})


# ---------------------------------------------------------------------------
# checks

def check_coefficients(seed: int = 0, tol_scale: float = 1.0) -> CheckResult:
    expected = [Fraction(1), Fraction(-1, 2), Fraction(-1, 8), Fraction(-1, 16), Fraction(-5, 128)]
    got = [nm.series_coeff(l)[0] for l in range(5)]
    taylor = taylor_coefficients(50)
    rec = [nm.series_coeff(l)[0] for l in range(51)]
    powers_ok = all(nm.series_coeff(l)[1] == 1 - 2 * l for l in range(51))
    ok = got == expected and rec == taylor and powers_ok
    mismatch = next((l for l in range(51) if rec[l] != taylor[l]), None)
    detail = f"f_0..f_4 = {[str(g) for g in got]}, recurrence vs Taylor l<=50 " + (
        "identical" if mismatch is None else f"differs at l={mismatch}")
    return CheckResult(1, "coefficients", "dispersion-series coefficients", ok, detail, 0.0, 1.0)


def convergence_ratio(m: float, x: float, L_lo: int, L_hi: int) -> float:
    err = lambda L: abs(nm.truncated_sqrt(m, x, L) - math.sqrt(m * m - x))
    return (err(L_hi) / err(L_lo)) ** (1.0 / (L_hi - L_lo))


def check_generating(seed: int = 0, tol_scale: float = 1.0) -> CheckResult:
    err = abs(nm.truncated_sqrt(1.0, 0.5, 60) - math.sqrt(0.5))
    ratios = {(1.0, 0.5): convergence_ratio(1.0, 0.5, 20, 30),
              (2.0, 3.0): convergence_ratio(2.0, 3.0, 40, 60)}
    rel = {k: abs(r - k[1] / k[0] ** 2) / (k[1] / k[0] ** 2) for k, r in ratios.items()}
    ok = err < 1e-12 * tol_scale and all(v < 0.10 for v in rel.values())
    detail = f"|S_60(1,0.5) - sqrt(0.5)| = {err:.2e}; ratios " + ", ".join(
        f"m={k[0]:g},x={k[1]:g}: {ratios[k]:.4f} vs {k[1] / k[0] ** 2:.4f} ({100 * rel[k]:.1f}%)" for k in ratios)
    return CheckResult(2, "generating", "generating identity", ok, detail, 0.0, 1.0)


def kernel_grid(m: float = 1.0, n: int = 10, edge: float = 0.9) -> np.ndarray:
    """``n`` points strictly inside ``(-edge, edge) m^2``, equally spaced."""
    return (-edge + 2 * edge * np.arange(1, n + 1) / (n + 1)) * m * m


def kernel_tail_bound(m: float, x: float, y: float, L: int) -> float:
    """Bound on the omitted terms ``l > L``: ``|f_l| l r^(l-1)`` summed, ``r = max|x|,|y|``."""
    r = max(abs(x), abs(y))
    total, l = 0.0, L + 1
    while True:
        t = abs(nm.series_coeff_value(m, l)) * l * r ** (l - 1)
        total += t
        if t < 1e-20 * max(total, 1e-300) or l > L + 10000:
            return total
        l += 1


def check_kernel(seed: int = 0, tol_scale: float = 1.0) -> CheckResult:
    worst, at = 0.0, None
    g = kernel_grid(1.0)
    for x in g:
        for y in g:
            e = abs(nm.two_sided_kernel(1.0, x, y, 80) - nm.two_sided_kernel_closed(1.0, x, y))
            if e > worst:
                worst, at = e, (x, y)
    bound = kernel_tail_bound(1.0, at[0], at[1], 80)
    ok = worst < 1e-12 * tol_scale
    detail = (f"max |K_80 - K| = {worst:.2e} at (x,y)=({at[0]:.3f},{at[1]:.3f}); "
              f"truncation tail bound there {bound:.2e}")
    return CheckResult(3, "kernel", "two-sided kernel identity", ok, detail, 0.0, 1.0)


def check_ward(seed: int = 0, tol_scale: float = 1.0) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(1000):
        m = (0.5, 1.0, 2.0)[i % 3]
        pp, p = rng.normal(0, 2 * m, 3), rng.normal(0, 2 * m, 3)
        if i % 4 == 0:
            p0p, p0 = nm.energy(pp, m), nm.energy(p, m)
        else:
            p0p, p0 = rng.normal(0, 3 * m), rng.normal(0, 3 * m)
        worst = max(worst, abs(nm.ward_defect(pp, p, p0p, p0, m)))
    r = random.Random(seed)
    exact = []
    for _ in range(5):
        vals = [Fraction(r.randint(-9, 9), r.randint(1, 9)) for _ in range(4)]
        exact.append(nm.ward_defect_exact(*vals, Fraction(r.randint(1, 9), r.randint(1, 4))))
    ok = worst < 1e-13 * tol_scale and all(v == 0 for v in exact)
    detail = f"max |defect| over 1000 momenta = {worst:.2e}; exact d=1 defects {[str(v) for v in exact]}"
    return CheckResult(4, "ward", "Ward identity", ok, detail, 0.0, 1.0)


def check_n1(seed: int = 0, tol_scale: float = 1.0) -> CheckResult:
    L = LagrangianSpec.from_text(KLEIN_GORDON, 4)
    results = {}
    for v in (SymmetryVariation.translation(), SymmetryVariation.u1()):
        results[v.kind] = noether_current(L, v) == classical_current(L, v)
    by_hand = noether_current(L, SymmetryVariation.translation()) == klein_gordon_emt_by_hand(4)
    ok = all(results.values()) and by_hand
    detail = ", ".join(f"{k}: {'equal' if v else 'DIFFERENT'}" for k, v in results.items())
    detail += f"; hand-written Klein-Gordon EMT {'equal' if by_hand else 'DIFFERENT'}"
    return CheckResult(5, "n1", "n=1 reduction", ok, detail, 0.0)


def check_defect(seed: int = 0, tol_scale: float = 1.0, assignments: int = 20) -> CheckResult:
    rng = random.Random(seed)
    symbolic_ok, poly_ok, notes = True, True, []
    for s in SHIPPED:
        L = s.spec()
        if L.max_order > 3:
            continue
        for v in (s.internal(), SymmetryVariation.translation()):
            d = divergence_defect(L, v)
            if not d.is_zero():
                symbolic_ok = False
                notes.append(f"{s.name}/{v.kind} symbolic")
        raw_t = divergence_defect(L, SymmetryVariation.translation(), smooth=False)
        raw_i = divergence_defect(L, s.internal(), smooth=False)
        for _ in range(assignments):
            asg = {f: Polynomial.random(L.dim, L.max_order + 2, rng) for f in L.fields}
            mval = Fraction(rng.randint(1, 7), rng.randint(1, 5))
            if not eval_polynomial(raw_i, asg, m=mval).is_zero():
                poly_ok = False
                notes.append(f"{s.name}/internal polynomial")
            for mu in range(L.dim):
                if not eval_polynomial(raw_t, asg, m=mval, bind={"mu": mu}).is_zero():
                    poly_ok = False
                    notes.append(f"{s.name}/translation mu={mu} polynomial")
    ok = symbolic_ok and poly_ok
    n = sum(1 for s in SHIPPED if s.spec().max_order <= 3)
    detail = (f"{n} Lagrangians (order <= 3): symbolic defect {'zero' if symbolic_ok else 'NONZERO'}, "
              f"{assignments} polynomial assignments each {'exactly 0' if poly_ok else 'NONZERO'}")
    if notes:
        detail += "; failures: " + ", ".join(notes[:5])
    return CheckResult(6, "defect", "off-shell divergence defect", ok, detail, 0.0, 30.0)


def check_cross(seed: int = 0, tol_scale: float = 1.0) -> CheckResult:
    from .nonlocal_model import (
        series_angular_momentum, series_emt, series_vector_current, spatial_part,
        truncated_model_lagrangian,
    )
    bad = []
    for L in range(0, 4):
        spec = truncated_model_lagrangian(L)
        if spatial_part(noether_current(spec, SymmetryVariation.u1())) != series_vector_current(L):
            bad.append(f"J L={L}")
        if L <= 2:
            if spatial_part(noether_current(spec, SymmetryVariation.translation())) != series_emt(L):
                bad.append(f"T L={L}")
            if spatial_part(noether_current(spec, SymmetryVariation.rotation())) != series_angular_momentum(L):
                bad.append(f"M L={L}")
    ok = not bad
    detail = "J (L<=3), T and M (L<=2): " + ("zero difference" if ok else "nonzero difference for " + ", ".join(bad))
    return CheckResult(7, "cross", "series vs Noether cross-derivation", ok, detail, 0.0, 60.0)


def check_gauge(seed: int = 0, tol_scale: float = 1.0) -> CheckResult:
    bad = []
    j0_ok = True
    for L in range(0, 3):
        g = nm.gauged_functional_derivative(L)
        j = noether_current(nm.truncated_model_lagrangian(L), SymmetryVariation.u1())
        if g != j:
            bad.append(f"L={L}")
        j0 = Expr.scalar(g.dim, g.component(0))
        if j0 != parse_expr("phi* phi", g.dim):
            j0_ok = False
    ok = not bad and j0_ok
    detail = ("gauged derivative == Noether current for L<=2" if not bad else "differs for " + ", ".join(bad))
    detail += f"; J^0 {'= phi* phi' if j0_ok else '!= phi* phi'}"
    return CheckResult(8, "gauge", "minimal substitution", ok, detail, 0.0)


def conservation_run(N: int = 128, steps: int = 1000):
    cfg = ss.LatticeConfig(1, N, 40.0, 1.0, 0.05, steps)
    st = ss.init_packet(cfg, [-3.0], 2.5, [0.8])
    recs, states = [ss.total_charges(st)], [st]
    cur = st
    for i in range(steps):
        cur = ss.evolve(cur, 1)
        recs.append(ss.total_charges(cur))
        if (i + 1) % (steps // 4) == 0:
            states.append(cur)
    return cfg, recs, states


def check_conservation(seed: int = 0, tol_scale: float = 1.0) -> CheckResult:
    cfg, recs, states = conservation_run()
    q0, e0, p0 = recs[0].Q, recs[0].E_tot, recs[0].P[0]
    dq = max(abs(r.Q - q0) for r in recs) / q0
    de = max(abs(r.E_tot - e0) for r in recs) / e0
    dp = max(abs(r.P[0] - p0) for r in recs) / abs(p0)
    cj = max(ss.continuity_defect(s) for s in states)
    ct = max(max(ss.emt_continuity_defect(s)) for s in states)
    ok = dq < 1e-13 * tol_scale and de < 1e-12 * tol_scale and dp < 1e-12 * tol_scale \
        and cj < 1e-10 * tol_scale and ct < 1e-10 * tol_scale
    detail = (f"d=1 N=128 1000 steps: Q drift {dq:.1e}, E drift {de:.1e}, P drift {dp:.1e}; "
              f"continuity J {cj:.1e}, T rows {ct:.1e}")
    return CheckResult(9, "conservation", "simulation conservation", ok, detail, 0.0, 30.0)


def representation_state():
    # box chosen so that the lattice mode n = 6 sits exactly at |k|^2 = m^2 / 2
    kcut = math.sqrt(0.5)
    cfg = ss.LatticeConfig(1, 128, 2 * math.pi * 6 / kcut, 1.0, 0.05)
    st = ss.init_packet(cfg, [0.0], 2.5, [0.3], band_limit=kcut * (1 + 1e-12))
    return ss.evolve(st, 40)


def check_representation(seed: int = 0, tol_scale: float = 1.0) -> CheckResult:
    st = representation_state()
    kmax2 = float(st.cfg.k2()[np.abs(st.coeffs) > 0].max())
    jc, _ = ss.current_density(st, "closed")
    norm = np.linalg.norm(jc)
    errs = {L: float(np.linalg.norm(ss.current_density(st, "series", L)[0] - jc) / norm)
            for L in (4, 8, 12, 16, 20, 40)}
    # geometric decay: log-linear fit over the pre-rounding range
    Ls = [4, 8, 12, 16, 20]
    slope = np.polyfit(Ls, np.log([errs[L] for L in Ls]), 1)[0]
    rate = float(np.exp(slope))
    ok = errs[40] < 1e-8 * tol_scale and rate < 0.9 and all(
        errs[a] > errs[b] for a, b in zip(Ls, Ls[1:]))
    detail = (f"max|k|^2 = {kmax2:.3f} m^2; rel. error L=4..20: "
              + ", ".join(f"{errs[L]:.1e}" for L in Ls)
              + f"; L=40: {errs[40]:.1e}; fitted decay per order {rate:.3f}")
    return CheckResult(10, "representation", "series vs closed current", ok, detail, 0.0, 60.0)


def check_angular(seed: int = 0, tol_scale: float = 1.0) -> CheckResult:
    cfg = ss.LatticeConfig(2, 256, 64.0, 1.0, 0.05)
    b, k0, w = 3.0, 1.0, 2.5
    st = ss.init_packet(cfg, [-8.0, b], w, [k0, 0.0])
    drift, leak, recs = ss.angular_momentum_drift(st, 400, record_every=20)
    m0 = recs[0].M[(1, 2)]
    oracle = -b * recs[0].Q * k0
    sym = ss.init_packet(cfg, [0.0, 0.0], w, [0.0, 0.0])
    _, _, srecs = ss.angular_momentum_drift(sym, 200, record_every=50)
    msym = max(abs(r.M[(1, 2)]) for r in srecs) / srecs[0].Q
    ok = drift < 1e-6 * tol_scale and msym < 1e-12 * tol_scale and abs(m0 - oracle) < 1e-8 * abs(oracle)
    detail = (f"d=2 N=256, t=0..{recs[-1].t:g}: M_12 drift {drift:.1e} (leakage <= {leak:.1e}), "
              f"M_12(0) = {m0:.6f} vs -bQk0 = {oracle:.6f}; symmetric packet |M|/Q <= {msym:.1e}")
    return CheckResult(11, "angular", "angular momentum", ok, detail, 0.0, 120.0)


def check_symmetry(seed: int = 0, tol_scale: float = 1.0) -> CheckResult:
    out = {}
    for d, N in ((1, 128), (2, 64)):
        cfg = ss.LatticeConfig(d, N, 40.0, 1.0, 0.05)
        st = ss.evolve(ss.init_packet(cfg, [1.5] * d, 2.5, [0.6] + [-0.3] * (d - 1)), 17)
        for X in "PTC":
            out[(d, X)] = ss.symmetry_test(st, X)
    pt = max(v for (d, X), v in out.items() if X != "C")
    c = min(v for (d, X), v in out.items() if X == "C")
    ok = pt < 1e-13 * tol_scale and c > 2
    detail = f"max P,T residual {pt:.1e}; min C residual {c:.4f} (> 2: C broken)"
    return CheckResult(12, "symmetry", "discrete symmetries", ok, detail, 0.0, 10.0)


CHECKS: Dict[str, Callable[..., CheckResult]] = {
    "coefficients": check_coefficients,
    "generating": check_generating,
    "kernel": check_kernel,
    "ward": check_ward,
    "n1": check_n1,
    "defect": check_defect,
    "cross": check_cross,
    "gauge": check_gauge,
    "conservation": check_conservation,
    "representation": check_representation,
    "angular": check_angular,
    "symmetry": check_symmetry,
}


def run_check(key: str, seed: int = 0, tol_scale: float = 1.0) -> CheckResult:
    if key not in CHECKS:
        raise KeyError(f"unknown suite {key!r}; choose from {', '.join(CHECKS)}")
    t = time.perf_counter()
    res = CHECKS[key](seed=seed, tol_scale=tol_scale)
    res.seconds = time.perf_counter() - t
    if not res.within_budget:
        res.passed = False
        res.detail += f"; runtime {res.seconds:.1f}s exceeds budget"
    return res
