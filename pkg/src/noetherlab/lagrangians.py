"""Invariant test Lagrangians used by the defect checks and the CLI demos."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from .nonlocal_model import truncated_model_lagrangian
from .variational import LagrangianSpec, SymmetryVariation


@dataclass(frozen=True)
class ShippedLagrangian:
    name: str
    text: Optional[str]
    dim: int
    fields: Tuple[str, ...] = ("phi",)
    generator: Optional[Tuple[Tuple[int, ...], ...]] = None
    model_order: Optional[int] = None

    def spec(self) -> LagrangianSpec:
        if self.model_order is not None:
            return truncated_model_lagrangian(self.model_order, self.dim - 1)
        return LagrangianSpec.from_text(self.text, self.dim, self.fields)

    def internal(self) -> SymmetryVariation:
        if self.generator is None:
            return SymmetryVariation.u1(self.fields)
        return SymmetryVariation.internal(self.fields, self.generator)

    @property
    def order(self) -> int:
        return self.spec().max_order


KLEIN_GORDON = "g[mu,nu] d[mu] phi* d[nu] phi - m^2 phi* phi"

SHIPPED: Sequence[ShippedLagrangian] = (
    ShippedLagrangian("klein-gordon", KLEIN_GORDON, 4),
    ShippedLagrangian(
        "doublet-mixing",
        "g[mu,nu] d[mu] u* d[nu] u + g[mu,nu] d[mu] v* d[nu] v - m^2 u* u - m^2 v* v",
        3, ("u", "v"), ((0, 1), (1, 0))),
    ShippedLagrangian(
        "box-squared",
        "g[a,b] g[c,e] d[a] d[b] phi* d[c] d[e] phi - m^2 g[a,b] d[a] phi* d[b] phi + m^4 phi* phi",
        4),
    ShippedLagrangian(
        "third-order",
        "g[a,b] g[c,e] g[f,h] d[a] d[c] d[f] phi* d[b] d[e] d[h] phi - m^6 phi* phi",
        3),
    ShippedLagrangian(
        "mixed-order",
        "i phi* d[0] phi - i phi d[0] phi* + phi* lap phi + phi lap phi* "
        "+ m^-2 g[a,b] d[a] lap phi* d[b] phi + m^-2 g[a,b] d[a] lap phi d[b] phi*",
        3),
    ShippedLagrangian("nonlocal-model-L1", None, 4, ("phi",), model_order=1),
)


def shipped(name: str) -> ShippedLagrangian:
    for s in SHIPPED:
        if s.name == name:
            return s
    raise KeyError(f"no shipped Lagrangian named {name!r}")
