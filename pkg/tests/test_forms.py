import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contactkit import expr as ex
from contactkit.errors import ChartMismatchError, DegreeError
from contactkit.forms import (
    ChartMap,
    KForm,
    VectorFieldChart,
    exterior_d,
    extend,
    interior_product,
    lie_derivative,
    parse_form,
    pullback,
    wedge,
)

from conftest import CHART3, CHART4, expressions, form_max, forms, sample_points

PTS3 = sample_points(CHART3, 7)
PTS4 = sample_points(CHART4, 7)


def scale_of(*fs, pts=PTS3):
    return 1.0 + max(form_max(f, pts) for f in fs)


def test_parse_form_terms():
    f = parse_form("x*dx^dy - 2*dy^dz", CHART3)
    assert f.degree == 2 and set(f.coeffs) == {(0, 1), (1, 2)}
    with pytest.raises(DegreeError):
        parse_form("dx + dx^dy", CHART3)


def test_basis_wedge_orientation():
    dx, dy, dz = (KForm.basis(CHART3, v) for v in "xyz")
    vol = wedge(wedge(dx, dy), dz)
    assert ex.to_text(vol.density) == "1"
    assert ex.evaluate_array(wedge(dy, dx).coefficient("x", "y"), (), ()) == -1
    assert wedge(dx, dx).is_zero()


def test_contact_form_density():
    a = parse_form("dz - y*dx", CHART3)
    d = wedge(a, exterior_d(a))
    assert ex.to_text(d.density) == "1"


def test_apply_is_determinant():
    f = parse_form("dx^dy", CHART3)
    u = np.array([[1.0], [2.0], [0.0]])
    v = np.array([[3.0], [5.0], [1.0]])
    assert float(f.apply([u, v], tuple(np.zeros(1) for _ in range(3)))[0]) == pytest.approx(1 * 5 - 2 * 3)


def test_pullback_requires_matching_chart():
    other = ex.make_chart("other", ("x", "y", "z"), [(-2.0, 2.0)] * 3)
    m = ChartMap(other, other, other.coords())
    with pytest.raises(ChartMismatchError):
        pullback(m, parse_form("dz", CHART3))


def test_pullback_polar():
    polar = ex.make_chart("P", ("r", "t"), [(0.1, 1.0), (0.0, 6.0)])
    plane = ex.make_chart("E", ("x", "y"), [(-1.0, 1.0)] * 2)
    r, t = polar.coords()
    m = ChartMap(polar, plane, (r * ex.cos(t), r * ex.sin(t)))
    area = pullback(m, parse_form("dx^dy", plane))
    pts = sample_points(polar, 5)
    assert np.allclose(area.values(pts)[(0, 1)], pts[0])


def test_extend_reorders_with_sign():
    swapped = CHART3.swapped(0, 1)
    f = extend(parse_form("dx^dy^dz", CHART3), swapped)
    assert ex.evaluate_array(f.density, (), ()) == -1


def test_d_of_top_degree_rejected():
    with pytest.raises(DegreeError):
        exterior_d(parse_form("dx^dy^dz", CHART3))


def test_lie_derivative_of_function_is_directional_derivative():
    f = parse_form("x^2*sin(y) + z", CHART3)
    v = VectorFieldChart.parse(["1", "x", "z"], CHART3)
    lv = lie_derivative(v, f)
    x, y, z = PTS3
    expected = 2 * x * np.sin(y) + x * x**2 * np.cos(y) + z
    assert np.allclose(ex.evaluate_array(lv.coefficient(), CHART3.variables, PTS3), expected)


@settings(max_examples=1000, deadline=None)
@given(st.integers(0, 2).flatmap(lambda k: forms(CHART4, k, 3)))
def test_d_squared_vanishes(f):
    dd = exterior_d(exterior_d(f))
    scale = scale_of(f, exterior_d(f), pts=PTS4)
    assert form_max(dd, PTS4) <= 1e-9 * scale * 100


@settings(max_examples=1000, deadline=None)
@given(st.integers(0, 2), st.integers(0, 1), st.data())
def test_graded_leibniz(p, q, data):
    a = data.draw(forms(CHART4, p, 2))
    b = data.draw(forms(CHART4, q, 2))
    lhs = exterior_d(wedge(a, b))
    sign = -1 if p % 2 else 1
    rhs = wedge(exterior_d(a), b) + wedge(a, exterior_d(b)).scale(sign)
    scale = scale_of(a, b, exterior_d(a), exterior_d(b), pts=PTS4)
    assert form_max(lhs - rhs, PTS4) <= 1e-9 * scale**2 * 100


@settings(max_examples=200, deadline=None)
@given(forms(CHART3, 1, 3), forms(CHART3, 1, 3))
def test_one_forms_anticommute(a, b):
    assert form_max(wedge(a, b) + wedge(b, a), PTS3) <= 1e-12 * scale_of(a, b) ** 2


@settings(max_examples=200, deadline=None)
@given(forms(CHART3, 1, 3))
def test_pullback_commutes_with_d(f):
    polar = ex.make_chart("cyl", ("r", "t", "h"), [(0.1, 0.9), (0.0, 3.0), (-1.0, 1.0)])
    r, t, h = polar.coords()
    m = ChartMap(polar, CHART3, (r * ex.cos(t), r * ex.sin(t), h * r))
    lhs = exterior_d(pullback(m, f))
    rhs = pullback(m, exterior_d(f))
    pts = sample_points(polar, 7)
    scale = 1 + form_max(pullback(m, exterior_d(f)), pts) + form_max(pullback(m, f), pts)
    assert form_max(lhs - rhs, pts) <= 1e-9 * scale * 100


@settings(max_examples=200, deadline=None)
@given(forms(CHART4, 2, 3), st.lists(expressions(("t", "x", "y", "z"), 3), min_size=4, max_size=4))
def test_interior_product_antiderivation(w, comps):
    v = VectorFieldChart(CHART4, tuple(comps))
    lhs = interior_product(v, wedge(w, w))
    rhs = wedge(interior_product(v, w), w).scale(2)
    scale = 1 + form_max(w, PTS4) ** 2 * (1 + max(abs(float(np.max(np.abs(c)))) for c in v.values(PTS4)))
    assert form_max(lhs - rhs, PTS4) <= 1e-10 * scale
