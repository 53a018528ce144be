"""Exact symbolic core: tensor expressions over ordered derivative atoms."""

from .coeff import I, ONE, QI, ZERO
from .expr import (
    Expr, Index, IndexError_, canonicalize, conj_name, conjugate, constant,
    coordinate, delta, deriv_wrt_atom, expand_components, field, mass, metric,
    metric_sign, set_fields_zero, symmetrize_derivatives, total_derivative,
)
from .parser import ParseError, parse_expr
from .poly import COORD, Atom, coord
from .polyeval import Polynomial, eval_polynomial
from .render import from_json, from_json_obj, render, to_json, to_json_obj

__all__ = [
    "Atom", "COORD", "Expr", "I", "Index", "IndexError_", "ONE", "ParseError",
    "Polynomial", "QI", "ZERO", "canonicalize", "conj_name", "conjugate",
    "constant", "coord", "coordinate", "delta", "deriv_wrt_atom",
    "eval_polynomial", "expand_components", "field", "from_json", "from_json_obj", "mass",
    "metric", "metric_sign", "parse_expr", "render", "set_fields_zero",
    "symmetrize_derivatives", "to_json", "to_json_obj", "total_derivative",
]
