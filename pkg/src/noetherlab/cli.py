"""Command line interface: ``noetherlab {derive,model,simulate,verify,report}``.

Exit codes: 0 success, 1 tolerance failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from . import nonlocal_model as nm
from . import spectral_sim as ss
from .tensor_expr import ParseError, render, to_json_obj
from .variational import (
    LagrangianSpec, SymmetryVariation, divergence_defect, noether_current,
    variation_of_lagrangian,
)

FLOAT_FMT = "%.16e"


class ConfigError(Exception):
    """Invalid or incomplete configuration (exit code 2)."""


# ---------------------------------------------------------------------------
# shared helpers

def fmt(v: Any) -> str:
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % float(v)
    if v is None:
        return ""
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_manifest(out: Path, command: str, config: Dict[str, Any], args, outputs: List[str],
                   tolerances: Optional[Dict[str, float]] = None) -> None:
    import matplotlib
    import sympy

    manifest = {
        "command": command,
        "config": config,
        "seed": args.seed,
        "tol_scale": args.tol_scale,
        "threads": os.environ.get("NOETHER_THREADS"),
        "tolerances": tolerances or {},
        "outputs": sorted(outputs),
        "versions": {
            "noetherlab": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "sympy": sympy.__version__,
            "matplotlib": matplotlib.__version__,
        },
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_config(path: Optional[str]) -> Dict[str, Any]:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}")
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


_MISSING = object()


def get_key(cfg: Dict[str, Any], path: str, kind=None, default=_MISSING):
    """Look up a dotted key path; missing required keys raise ConfigError naming the path."""
    cur: Any = cfg
    for part in path.split("."):
        if not isinstance(cur, dict) or part not in cur:
            if default is _MISSING:
                raise ConfigError(f"missing config key '{path}'")
            return default
        cur = cur[part]
    if kind is not None:
        try:
            if kind is list:
                if not isinstance(cur, list):
                    raise TypeError
                return [float(v) for v in cur]
            if kind is int and (isinstance(cur, bool) or float(cur) != int(cur)):
                raise TypeError
            return kind(cur)
        except (TypeError, ValueError):
            raise ConfigError(f"config key '{path}' has invalid value {cur!r}")
    return cur


def out_dir(args, default: str) -> Path:
    p = Path(args.out or default)
    p.mkdir(parents=True, exist_ok=True)
    return p


# ---------------------------------------------------------------------------
# derive

SYMMETRIES = ("internal", "translation", "rotation")


def _variation(kind: str, fields: Sequence[str]) -> SymmetryVariation:
    if kind == "internal":
        return SymmetryVariation.u1(fields)
    if kind == "translation":
        return SymmetryVariation.translation()
    return SymmetryVariation.rotation()


def cmd_derive(args) -> int:
    cfg = load_config(args.config)
    spec_path = args.spec or get_key(cfg, "spec", str)
    dim = args.dim or get_key(cfg, "dim", int, 4)
    fields = args.fields.split(",") if args.fields else get_key(cfg, "fields", None, ["phi"])
    sym = args.symmetry or get_key(cfg, "symmetry", None, "all")
    kinds = list(SYMMETRIES) if sym == "all" else [s.strip() for s in str(sym).split(",")]
    for k in kinds:
        if k not in SYMMETRIES:
            raise ConfigError(f"unknown symmetry {k!r}; choose from {', '.join(SYMMETRIES)} or all")
    try:
        text = Path(spec_path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read spec file {spec_path}: {exc.strerror}")
    body = "\n".join(line.split("#", 1)[0] for line in text.splitlines())
    try:
        L = LagrangianSpec.from_text(body, dim, fields)
    except ParseError as exc:
        raise ConfigError(f"{spec_path}:{exc}")
    except ValueError as exc:
        raise ConfigError(f"{spec_path}: {exc}")
    out = out_dir(args, "derive_out")
    currents, lines, status = {}, [], 0
    lines.append(f"# Lagrangian (D={dim}, fields {', '.join(L.fields)})")
    lines.append(render(L.expr))
    for k in kinds:
        v = _variation(k, fields)
        if not variation_of_lagrangian(L, v).is_zero():
            print(f"warning: Lagrangian is not invariant under {k}; its current is not conserved",
                  file=sys.stderr)
        K = noether_current(L, v)
        currents[k] = to_json_obj(K)
        lines += ["", f"# {k} current", render(K)]
        if args.defect:
            d = divergence_defect(L, v, current=K)
            lines += [f"# {k} divergence defect", render(d)]
            print(f"defect[{k}] = {render(d) if d.is_zero() else 'NONZERO'}")
            if not d.is_zero():
                status = 1
    with open(out / "currents.json", "w") as fh:
        json.dump(currents, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")
    (out / "currents.txt").write_text("\n".join(lines) + "\n")
    write_manifest(out, "derive", {"spec": str(spec_path), "dim": dim, "fields": list(fields),
                                   "symmetry": kinds, "defect": bool(args.defect)},
                   args, ["currents.json", "currents.txt"])
    print(f"wrote {out / 'currents.json'} and {out / 'currents.txt'}")
    return status


# ---------------------------------------------------------------------------
# model

def model_tables(cfg: Dict[str, Any], seed: int):
    order = get_key(cfg, "order", int, 20)
    mass = get_key(cfg, "mass", float, 1.0)
    samples = get_key(cfg, "samples", int, 200)
    dim = get_key(cfg, "dim", int, 3)
    points = get_key(cfg, "kernel_points", None, [[0.3, -0.7], [0.5, 0.5], [-0.8, 0.6]])
    if order < 0 or mass <= 0 or samples < 0 or dim < 1:
        raise ConfigError("model config needs order >= 0, mass > 0, samples >= 0, dim >= 1")
    coeffs = nm.coefficient_table(order)
    rng = np.random.default_rng(seed)
    ward = []
    for _ in range(samples):
        pp, p = rng.normal(0, 2 * mass, dim), rng.normal(0, 2 * mass, dim)
        p0p, p0 = rng.normal(0, 3 * mass), rng.normal(0, 3 * mass)
        ward.append(list(p) + list(pp) + [p0, p0p, nm.ward_defect(pp, p, p0p, p0, mass)])
    kernel = []
    for x, y in points:
        x, y = float(x) * mass ** 2, float(y) * mass ** 2
        try:
            closed = nm.two_sided_kernel_closed(mass, x, y)
        except ValueError as exc:
            raise ConfigError(f"kernel point ({x}, {y}): {exc}")
        for L in range(1, order + 1):
            t = nm.two_sided_kernel(mass, x, y, L)
            kernel.append([L, x, y, t, closed, abs(t - closed)])
    resolved = {"order": order, "mass": mass, "samples": samples, "dim": dim,
                "kernel_points": [[float(a), float(b)] for a, b in points]}
    ward_header = [f"p_{i + 1}" for i in range(dim)] + [f"pp_{i + 1}" for i in range(dim)] + ["p0", "pp0", "defect"]
    return resolved, coeffs, (ward_header, ward), kernel


def cmd_model(args) -> int:
    cfg = load_config(args.config)
    if args.order is not None:
        cfg["order"] = args.order
    if args.mass is not None:
        cfg["mass"] = args.mass
    resolved, coeffs, (wh, ward), kernel = model_tables(cfg, args.seed)
    out = out_dir(args, "model_out")
    write_csv(out / "coefficients.csv", ["l", "numerator", "denominator", "m_power"], coeffs)
    write_csv(out / "ward_scan.csv", wh, ward)
    write_csv(out / "kernel_convergence.csv", ["L", "x", "y", "truncated", "closed", "abs_error"], kernel)
    tol = 1e-13 * args.tol_scale
    worst = max((abs(r[-1]) for r in ward), default=0.0)
    write_manifest(out, "model", resolved, args,
                   ["coefficients.csv", "ward_scan.csv", "kernel_convergence.csv"], {"ward": tol})
    print(f"max |Ward defect| = {worst:.3e} over {len(ward)} samples")
    if worst >= tol:
        print(f"FAIL ward: defect {worst:.3e} >= {tol:.1e}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# simulate

def parse_sim_config(cfg: Dict[str, Any]):
    d = get_key(cfg, "lattice.d", int)
    try:
        lattice = ss.LatticeConfig(
            d=d, N=get_key(cfg, "lattice.N", int), box=get_key(cfg, "lattice.box", float),
            m=get_key(cfg, "lattice.m", float, 1.0), dt=get_key(cfg, "lattice.dt", float),
            steps=get_key(cfg, "lattice.steps", int))
    except ValueError as exc:
        raise ConfigError(f"lattice: {exc}")
    packet = {
        "center": get_key(cfg, "packet.center", list),
        "width": get_key(cfg, "packet.width", float),
        "carrier": get_key(cfg, "packet.carrier", list),
        "amplitude": get_key(cfg, "packet.amplitude", float, 1.0),
        "band_limit": get_key(cfg, "packet.band_limit", None, None),
    }
    run = {
        "record_every": get_key(cfg, "run.record_every", int, 1),
        "continuity": bool(get_key(cfg, "run.continuity", None, False)),
    }
    outputs = {
        "charges": get_key(cfg, "outputs.charges", str, "charges.csv"),
        "snapshots": bool(get_key(cfg, "outputs.snapshots", None, False)),
    }
    if run["record_every"] < 1:
        raise ConfigError("config key 'run.record_every' must be >= 1")
    return lattice, packet, run, outputs


def simulate(cfg: Dict[str, Any]):
    lattice, packet, run, outputs = parse_sim_config(cfg)
    try:
        st = ss.init_packet(lattice, packet["center"], packet["width"], packet["carrier"],
                            packet["amplitude"], packet["band_limit"])
    except ss.PacketError as exc:
        raise ConfigError(f"packet: {exc}")
    records = ss.run(st, lattice.steps, run["record_every"], run["continuity"])
    final = ss.evolve(st, lattice.steps)
    resolved = {
        "lattice": {"d": lattice.d, "N": lattice.N, "box": lattice.box, "m": lattice.m,
                    "dt": lattice.dt, "steps": lattice.steps},
        "packet": packet, "run": run, "outputs": outputs,
    }
    return resolved, lattice, records, final


def charges_rows(lattice: ss.LatticeConfig, records):
    pairs = sorted(records[0].M) if records else []
    header = (["t", "Q", "E_tot"] + [f"P{a + 1}" for a in range(lattice.d)]
              + [f"M{a}{b}" for a, b in pairs] + ["continuity_defect", "leakage"])
    rows = []
    for r in records:
        rows.append([r.t, r.Q, r.E_tot, *r.P, *(r.M[p] for p in pairs), r.continuity_defect, r.leakage])
    return header, rows


def cmd_simulate(args) -> int:
    if not args.config:
        raise ConfigError("simulate needs --config <path>")
    cfg = load_config(args.config)
    resolved, lattice, records, final = simulate(cfg)
    out = out_dir(args, "simulate_out")
    header, rows = charges_rows(lattice, records)
    files = [resolved["outputs"]["charges"]]
    write_csv(out / files[0], header, rows)
    if resolved["outputs"]["snapshots"]:
        np.save(out / "field_final.npy", final.field())
        files.append("field_final.npy")
    write_manifest(out, "simulate", resolved, args, files)
    q0 = records[0].Q
    print(f"{len(records)} records, relative charge drift "
          f"{max(abs(r.Q - q0) for r in records) / q0:.3e}; wrote {out / files[0]}")
    return 0


def sim_tolerances(tol_scale: float) -> Dict[str, float]:
    return {"Q": 1e-13 * tol_scale, "E_tot": 1e-12 * tol_scale, "P": 1e-12 * tol_scale,
            "continuity": 1e-10 * tol_scale}


def verify_simulation(cfg: Dict[str, Any], tol_scale: float):
    resolved, lattice, records, final = simulate(cfg)
    tol = sim_tolerances(tol_scale)
    r0 = records[0]
    checks = {"Q": max(abs(r.Q - r0.Q) for r in records) / r0.Q,
              "E_tot": max(abs(r.E_tot - r0.E_tot) for r in records) / r0.E_tot}
    pscale = max(np.linalg.norm(r0.P), 1e-300)
    checks["P"] = max(np.linalg.norm(np.subtract(r.P, r0.P)) for r in records) / pscale
    if lattice.modes <= 2 ** 12:
        checks["continuity"] = max(ss.continuity_defect(final), max(ss.emt_continuity_defect(final)))
    return resolved, {k: (v, tol[k], v < tol[k]) for k, v in checks.items()}


# ---------------------------------------------------------------------------
# verify

def cmd_verify(args) -> int:
    from .acceptance import CHECKS, run_check

    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    if args.config:
        resolved, results = verify_simulation(load_config(args.config), args.tol_scale)
        failed = []
        for k, (v, tol, ok) in results.items():
            print(f"{'PASS' if ok else 'FAIL'} {k}: {v:.3e} (tolerance {tol:.1e})")
            if not ok:
                failed.append(k)
        if out:
            write_csv(out / "verify.csv", ["quantity", "value", "tolerance", "passed"],
                      [[k, v, t, ok] for k, (v, t, ok) in results.items()])
            write_manifest(out, "verify", resolved, args, ["verify.csv"],
                           {k: t for k, (_, t, _) in results.items()})
        if failed:
            print(f"failed: {', '.join(failed)}", file=sys.stderr)
            return 1
        return 0
    suites = args.suite or ["all"]
    keys = list(CHECKS) if "all" in suites else suites
    for k in keys:
        if k not in CHECKS:
            raise ConfigError(f"unknown suite {k!r}; choose from {', '.join(CHECKS)} or all")
    results = []
    for k in keys:
        res = run_check(k, seed=args.seed, tol_scale=args.tol_scale)
        print(res.line(), flush=True)
        results.append(res)
    if out:
        write_csv(out / "verify.csv", ["criterion", "suite", "passed", "seconds", "detail"],
                  [[r.number, r.key, r.passed, r.seconds, r.detail] for r in results])
        write_manifest(out, "verify", {"suites": keys}, args, ["verify.csv"])
    failed = [f"{r.number} ({r.key})" for r in results if not r.passed]
    if failed:
        print(f"failed criteria: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# report

DEMO_SIM = {
    "lattice": {"d": 1, "N": 128, "box": 40.0, "m": 1.0, "dt": 0.05, "steps": 1000},
    "packet": {"center": [-3.0], "width": 2.5, "carrier": [0.8], "amplitude": 1.0},
    "run": {"record_every": 10, "continuity": False},
    "outputs": {"charges": "charges.csv"},
}


def cmd_report(args) -> int:
    from .report import write_report

    cfg = load_config(args.config) if args.config else {}
    sim_cfg = cfg.get("simulate", DEMO_SIM)
    model_cfg = cfg.get("model", {})
    out = out_dir(args, "report_out")
    files = write_report(out, model_cfg, sim_cfg, args.seed)
    write_manifest(out, "report", {"model": model_cfg, "simulate": sim_cfg}, args, files)
    print(f"wrote {len(files)} files to {out}")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--tol-scale", type=float, default=1.0, help="multiply all tolerances")

    p = argparse.ArgumentParser(prog="noetherlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"noetherlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("derive", parents=[common], help="Noether currents of a DSL Lagrangian")
    d.add_argument("spec", nargs="?", help="Lagrangian file in the DSL ('#' starts a comment)")
    d.add_argument("--dim", type=int, help="spacetime dimension D (default 4)")
    d.add_argument("--fields", help="comma-separated complex fields (default phi)")
    d.add_argument("--symmetry", help="internal, translation, rotation, a comma list, or all")
    d.add_argument("--defect", action="store_true", help="also emit the off-shell divergence defect")
    d.set_defaults(func=cmd_derive)

    m = sub.add_parser("model", parents=[common], help="coefficient, Ward and kernel tables")
    m.add_argument("--order", type=int, help="series truncation order (default 20)")
    m.add_argument("--mass", type=float, help="mass (default 1)")
    m.set_defaults(func=cmd_model)

    s = sub.add_parser("simulate", parents=[common], help="run the spectral simulator")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", parents=[common], help="run acceptance checks")
    v.add_argument("--suite", action="append",
                   help="criterion to run (repeatable): coefficients, generating, kernel, ward, n1, "
                        "defect, cross, gauge, conservation, representation, angular, symmetry, all")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("report", parents=[common], help="CSV tables and PNG figures")
    r.set_defaults(func=cmd_report)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.tol_scale <= 0:
        parser.error("--tol-scale must be positive")
    if args.seed < 0 or args.seed >= 2 ** 64:
        parser.error("--seed must be an unsigned 64-bit integer")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
