import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from noetherlab import nonlocal_model as nm
from noetherlab.acceptance import taylor_coefficients
from noetherlab.tensor_expr import Expr, parse_expr
from noetherlab.variational import SymmetryVariation, noether_current

momenta = st.floats(-3, 3, allow_nan=False)


def test_first_coefficients():
    assert nm.series_coeff(0) == (Fraction(1), 1)
    assert nm.series_coeff(1) == (Fraction(-1, 2), -1)
    assert nm.series_coeff(2) == (Fraction(-1, 8), -3)
    assert nm.series_coeff(3) == (Fraction(-1, 16), -5)


def test_coefficients_match_sympy_taylor_series():
    want = taylor_coefficients(40)
    assert [nm.series_coeff(l)[0] for l in range(41)] == want


def test_coefficient_table_rows():
    rows = nm.coefficient_table(3)
    assert rows[2] == (2, -1, 8, -3)
    assert len(rows) == 4
    with pytest.raises(ValueError):
        nm.series_coeff(-1)


@pytest.mark.parametrize("m, x", [(1.0, 0.5), (2.0, -3.0), (0.7, 0.3)])
def test_truncated_sqrt_converges(m, x):
    assert nm.truncated_sqrt(m, x, 200) == pytest.approx(math.sqrt(m * m - x), rel=1e-13)


def test_truncated_sqrt_low_orders():
    # m + f_1 x = 1 - x/2 at m = 1
    assert nm.truncated_sqrt(1.0, 0.2, 1) == pytest.approx(0.9)
    assert nm.truncated_sqrt(3.0, 5.0, 0) == 3.0


def test_kernel_matches_closed_form_inside_domain():
    for x, y in [(0.5, 0.5), (0.3, -0.6), (-0.7, 0.1)]:
        got = nm.two_sided_kernel(1.0, x, y, 120)
        assert got == pytest.approx(nm.two_sided_kernel_closed(1.0, x, y), abs=1e-13)


def test_kernel_on_the_diagonal_is_derivative_of_sqrt():
    # K(x, x) = d/dx sqrt(m^2 - x) = -1 / (2 sqrt(m^2 - x))
    m, x = 1.5, 0.8
    assert nm.two_sided_kernel_closed(m, x, x) == pytest.approx(-0.5 / math.sqrt(m * m - x))


def test_kernel_is_symmetric():
    assert nm.two_sided_kernel(1.0, 0.2, -0.4, 30) == pytest.approx(nm.two_sided_kernel(1.0, -0.4, 0.2, 30))


def test_closed_kernel_domain():
    with pytest.raises(ValueError):
        nm.two_sided_kernel_closed(1.0, 1.0, 0.0)


def test_current_example_value():
    j = nm.current_momentum([0.5], [0.3], 1.0)
    assert j[0] == 1.0
    assert j[1] == pytest.approx(0.3700167, abs=1e-6)
    assert j[1] == pytest.approx(0.8 / (math.sqrt(1.25) + math.sqrt(1.09)))


def test_forward_current_is_group_velocity():
    p = np.array([0.4, -0.2, 0.1])
    j = nm.current_momentum(p, p, 1.3)
    assert np.allclose(j[1:], p / nm.energy(p, 1.3))


def test_emt_rows():
    pp, p, m = [0.5, 0.1], [0.3, -0.2], 1.0
    T = nm.emt_momentum(pp, p, m)
    j = nm.current_momentum(pp, p, m)
    assert T.shape == (3, 3)
    assert np.allclose(T[0], 0.5 * (nm.energy(pp, m) + nm.energy(p, m)) * j)
    assert np.allclose(T[1:, 0], -0.5 * (np.array(pp) + np.array(p)))


@given(st.lists(momenta, min_size=3, max_size=3), st.lists(momenta, min_size=3, max_size=3),
       st.floats(-5, 5), st.floats(-5, 5), st.floats(0.1, 4))
@settings(max_examples=200)
def test_ward_identity_off_shell(pp, p, p0p, p0, m):
    assert abs(nm.ward_defect(pp, p, p0p, p0, m)) < 1e-12 * (1 + abs(p0p) + abs(p0) + 10)


@pytest.mark.parametrize("pp, p, p0p, p0, m", [
    (Fraction(1, 2), Fraction(3, 10), Fraction(7), Fraction(-2, 3), Fraction(1)),
    (Fraction(-5, 3), Fraction(2), Fraction(0), Fraction(1, 9), Fraction(3, 2)),
])
def test_ward_identity_exact(pp, p, p0p, p0, m):
    assert nm.ward_defect_exact(pp, p, p0p, p0, m) == 0


def test_alternative_current():
    p = [0.4, 0.0]
    alt = nm.alternative_covariant_current(p, p, 1.0)
    # forward limit agrees with the model current
    assert np.allclose(alt, nm.current_momentum(p, p, 1.0))
    pp = [-0.6, 0.2]
    alt = nm.alternative_covariant_current(pp, p, 1.0)
    assert not np.allclose(alt, nm.current_momentum(pp, p, 1.0))


def test_lowest_order_lagrangian():
    want = parse_expr("1/2 i phi* d[0] phi - 1/2 i phi d[0] phi* - m phi* phi", 2)
    assert nm.truncated_model_lagrangian(0, 1).expr == want


def test_first_order_lagrangian_in_one_dimension():
    want = parse_expr("1/2 i phi* d[0] phi - 1/2 i phi d[0] phi* - m phi* phi"
                      " + 1/4 m^-1 phi* d[1] d[1] phi + 1/4 m^-1 phi d[1] d[1] phi*", 2)
    assert nm.truncated_model_lagrangian(1, 1).expr == want


def test_first_order_current_in_one_dimension():
    J = noether_current(nm.truncated_model_lagrangian(1, 1), SymmetryVariation.u1())
    assert Expr.scalar(2, J.component(0)) == parse_expr("phi* phi", 2)
    # -1/4 i m^-1 (phi* d_1 phi - d_1 phi* phi) + c.c.
    want = parse_expr("- 1/2 i m^-1 phi* d[1] phi + 1/2 i m^-1 phi d[1] phi*", 2)
    assert Expr.scalar(2, J.component(1)) == want


def test_symbolic_size_guard():
    with pytest.raises(ValueError, match="size guard"):
        nm.truncated_model_lagrangian(nm.MAX_SYMBOLIC_ORDER + 1)
    with pytest.raises(ValueError):
        nm.gauged_lagrangian(3)


@pytest.mark.parametrize("L", [0, 1, 2])
def test_gauged_charge_density(L):
    g = nm.gauged_functional_derivative(L, 2)
    assert Expr.scalar(3, g.component(0)) == parse_expr("phi* phi", 3)


@pytest.mark.parametrize("L", [1, 2, 3])
def test_series_current_matches_noether_in_two_dimensions(L):
    J = noether_current(nm.truncated_model_lagrangian(L, 2), SymmetryVariation.u1())
    assert nm.spatial_part(J) == nm.series_vector_current(L, 2)


@pytest.mark.parametrize("L", [1, 2])
def test_series_emt_and_angular_momentum_match_noether(L):
    spec = nm.truncated_model_lagrangian(L, 2)
    T = noether_current(spec, SymmetryVariation.translation())
    assert nm.spatial_part(T) == nm.series_emt(L, 2)
    M = noether_current(spec, SymmetryVariation.rotation())
    assert nm.spatial_part(M) == nm.series_angular_momentum(L, 2)


def test_dropping_lagrangian_term_changes_only_the_diagonal():
    diff = nm.series_emt(1, 2) - nm.series_emt(1, 2, include_lagrangian=False)
    lag = nm.truncated_model_lagrangian(1, 2).expr
    for (mu, a), poly in diff.components().items():
        assert mu == a
        assert Expr.scalar(3, poly) == -lag
