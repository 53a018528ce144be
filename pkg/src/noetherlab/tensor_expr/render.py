"""Text rendering and canonical JSON serialisation of :class:`Expr`."""

from __future__ import annotations

import json
from fractions import Fraction

from .coeff import QI
from .expr import Expr, Index
from .poly import COORD, Atom


def _atom_str(at: Atom) -> str:
    if at.field == COORD:
        return f"x^{at.index[0]}"
    if not at.index:
        return at.field
    return "d_" + "".join(str(i) for i in at.index) + " " + at.field


def _term_str(mp: int, mono, c: QI) -> str:
    parts = []
    if c.im and c.re:
        parts.append(f"({c})")
    elif c != 1:
        parts.append("-" if c == -1 else str(c))
    if mp:
        parts.append("m" if mp == 1 else f"m^{mp}")
    parts.extend(_atom_str(a) for a in mono)
    if not parts or parts == ["-"]:
        parts.append("1")
    out = " ".join(parts)
    return out.replace("- ", "-", 1) if out.startswith("- ") else out


def render_poly(poly) -> str:
    if not poly:
        return "0"
    terms = [_term_str(mp, mono, c) for (mp, mono), c in poly.items()]
    out = terms[0]
    for t in terms[1:]:
        out += " - " + t[1:] if t.startswith("-") else " + " + t
    return out


def render(e: Expr) -> str:
    if e.is_zero():
        return "0"
    if not e.free:
        return render_poly(e.component())
    lines = []
    for comp, poly in e.components().items():
        label = ",".join(f"{ix}={v}" for ix, v in zip(e.free, comp))
        lines.append(f"[{label}] {render_poly(poly)}")
    return "\n".join(lines)


def to_json_obj(e: Expr) -> dict:
    comps = []
    for comp, poly in e.components().items():
        terms = []
        for (mp, mono), c in poly.items():
            terms.append({
                "re": str(c.re), "im": str(c.im), "m": mp,
                "atoms": [[a.field, list(a.index)] for a in mono],
            })
        comps.append({"index": list(comp), "terms": terms})
    return {
        "dim": e.dim,
        "free": [{"name": ix.name, "up": ix.up} for ix in e.free],
        "components": comps,
    }


def to_json(e: Expr) -> str:
    return json.dumps(to_json_obj(e), sort_keys=True, separators=(",", ":"))


def from_json_obj(obj: dict) -> Expr:
    free = [Index(f["name"], f["up"]) for f in obj["free"]]
    comps = {}
    for c in obj["components"]:
        poly = {}
        for t in c["terms"]:
            mono = tuple(sorted(Atom(f, tuple(ix)) for f, ix in t["atoms"]))
            poly[(t["m"], mono)] = QI(Fraction(t["re"]), Fraction(t["im"]))
        comps[tuple(c["index"])] = poly
    return Expr(obj["dim"], free, comps)


def from_json(text: str) -> Expr:
    return from_json_obj(json.loads(text))
