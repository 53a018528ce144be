"""Figures for ``noetherlab report``: CSV tables plus matplotlib PNGs."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Dict, List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from . import nonlocal_model as nm  # noqa: E402
from . import spectral_sim as ss  # noqa: E402

_PNG_META = {"Software": None}


def _save(fig, path: Path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_PNG_META)
    plt.close(fig)


def coefficient_figure(rows, mass: float, path: Path) -> None:
    ls = [r[0] for r in rows]
    vals = [abs(r[1] / r[2]) * mass ** r[3] for r in rows]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogy(ls, vals, "o-", ms=3)
    ax.set_xlabel("l")
    ax.set_ylabel("|f_l(m)|")
    ax.set_title(f"dispersion-series coefficients, m = {mass:g}")
    _save(fig, path)


def kernel_figure(kernel_rows, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    by_point: Dict[tuple, List] = {}
    for L, x, y, _, _, err in kernel_rows:
        by_point.setdefault((x, y), []).append((L, max(err, 1e-18)))
    for (x, y), pts in by_point.items():
        Ls, errs = zip(*pts)
        ax.semilogy(Ls, errs, label=f"x={x:g}, y={y:g}")
    ax.set_xlabel("truncation order L")
    ax.set_ylabel("|truncated - closed|")
    ax.set_title("two-sided kernel convergence")
    ax.legend(fontsize=7)
    _save(fig, path)


def charges_figure(header, rows, path: Path) -> None:
    t = np.array([r[0] for r in rows])
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name in ("Q", "E_tot", "P1"):
        i = header.index(name)
        v = np.array([r[i] for r in rows])
        ax.semilogy(t, np.maximum(np.abs(v - v[0]) / abs(v[0]), 1e-18), label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("relative drift")
    ax.set_title("conserved charges")
    ax.legend(fontsize=7)
    _save(fig, path)


def series_rows(orders=range(2, 41, 2)):
    kcut = math.sqrt(0.5)
    cfg = ss.LatticeConfig(1, 128, 2 * math.pi * 6 / kcut, 1.0, 0.05)
    st = ss.evolve(ss.init_packet(cfg, [0.0], 2.5, [0.3], band_limit=kcut * (1 + 1e-12)), 40)
    jc, _ = ss.current_density(st, "closed")
    n = np.linalg.norm(jc)
    return [[L, float(np.linalg.norm(ss.current_density(st, "series", L)[0] - jc) / n)] for L in orders]


def series_figure(rows, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogy([r[0] for r in rows], [max(r[1], 1e-18) for r in rows], "o-", ms=3)
    ax.set_xlabel("series order L")
    ax.set_ylabel("relative L2 difference")
    ax.set_title("series vs closed current, max k^2 = m^2/2")
    _save(fig, path)


def write_report(out: Path, model_cfg: Dict[str, Any], sim_cfg: Dict[str, Any], seed: int) -> List[str]:
    from .cli import charges_rows, model_tables, simulate, write_csv

    resolved, coeffs, (wh, ward), kernel = model_tables(model_cfg, seed)
    write_csv(out / "coefficients.csv", ["l", "numerator", "denominator", "m_power"], coeffs)
    write_csv(out / "ward_scan.csv", wh, ward)
    write_csv(out / "kernel_convergence.csv", ["L", "x", "y", "truncated", "closed", "abs_error"], kernel)
    coefficient_figure(coeffs, resolved["mass"], out / "coefficients.png")
    kernel_figure(kernel, out / "kernel_convergence.png")

    _, lattice, records, _ = simulate(sim_cfg)
    header, rows = charges_rows(lattice, records)
    write_csv(out / "charges.csv", header, rows)
    charges_figure(header, rows, out / "charges.png")

    srows = series_rows()
    write_csv(out / "series_convergence.csv", ["L", "relative_error"], srows)
    series_figure(srows, out / "series_convergence.png")
    return ["coefficients.csv", "ward_scan.csv", "kernel_convergence.csv", "charges.csv",
            "series_convergence.csv", "coefficients.png", "kernel_convergence.png",
            "charges.png", "series_convergence.png"]
