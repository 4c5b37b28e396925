import numpy as np
import pytest

from contactkit import expr as ex
from contactkit.errors import PreconditionError
from contactkit.forms import KForm, VectorFieldChart, exterior_d, parse_form, wedge
from contactkit.planefields import example, torus_chart
from contactkit.symplectic import (
    check_dilating,
    filling_form,
    identity_residual,
    induced_boundary_form,
    oriented_kernel_basis,
    polar_r4,
    random_points,
    standard_r4,
    taut_t3_example,
    weak_domination_check,
    weak_filling_form,
)


def random_polynomial(rng, variables, degree=2):
    terms = [f"({rng.integers(-3, 4)}/{rng.integers(1, 4)})"]
    for v in variables:
        for d in range(1, degree + 1):
            terms.append(f"({rng.integers(-3, 4)}/{rng.integers(1, 4)})*{v}^{d}")
    a, b = rng.choice(len(variables), 2, replace=False)
    terms.append(f"({rng.integers(-3, 4)})*{variables[a]}*{variables[b]}")
    return " + ".join(terms)


def random_closed_two_form(rng, chart):
    beta = KForm.one_form(chart, [ex.parse_expr(random_polynomial(rng, chart.variables), chart)
                                  for _ in chart.variables])
    const = parse_form(f"{rng.integers(1, 4)}*dx1^dy1 + {rng.integers(1, 4)}*dx2^dy2", chart)
    return exterior_d(beta) + const


def test_oriented_kernel_basis_orientation():
    alpha = np.array([[0.3, -1.0], [0.2, 0.5], [1.0, 2.0]])
    v, w = oriented_kernel_basis(alpha)
    n = alpha / np.linalg.norm(alpha, axis=0)
    for k in range(alpha.shape[1]):
        assert abs(alpha[:, k] @ v[:, k]) < 1e-12 and abs(alpha[:, k] @ w[:, k]) < 1e-12
        assert np.linalg.det(np.stack([n[:, k], v[:, k], w[:, k]])) > 0


def test_t3_certificate():
    alpha, v, Omega = taut_t3_example()
    cert = weak_filling_form(alpha, v, Omega, eps=1.0)
    assert cert.valid
    assert cert.d_omega_norm <= 1e-12
    assert cert.omega_squared_min == pytest.approx(2.0, rel=1e-9)
    assert cert.omega_squared_max == pytest.approx(2.0, rel=1e-9)


@pytest.mark.parametrize("eps", [0.5, 0.25, 0.125])
def test_t3_omega_squared_is_two_eps(eps):
    alpha, v, Omega = taut_t3_example()
    cert = weak_filling_form(alpha, v, Omega, eps=eps)
    assert cert.valid
    assert cert.omega_squared_min == pytest.approx(2 * eps, rel=1e-9)


def test_t3_eps_zero_is_not_a_certificate():
    alpha, v, Omega = taut_t3_example()
    assert not weak_filling_form(alpha, v, Omega, eps=0.0).valid


def test_filling_form_closed_for_nonconstant_data():
    chart = torus_chart()
    alpha = parse_form("dz + (1/10)*sin(2*pi*x)*dy", chart)
    v = VectorFieldChart.coordinate(chart, "z")
    omega, X = filling_form(alpha, v, KForm.volume(chart), 0.5)
    assert exterior_d(omega).max_norm(X.grid(5)) <= 1e-12


def test_field_not_preserving_volume_rejected():
    chart = torus_chart()
    alpha = parse_form("dz", chart)
    v = VectorFieldChart.parse(["0", "0", "1 + (1/2)*sin(2*pi*z)"], chart)
    with pytest.raises(PreconditionError):
        weak_filling_form(alpha, v, KForm.volume(chart), eps=1.0)


def test_dilating_fields():
    chart, omega, v = standard_r4()
    assert check_dilating(v, omega).ok
    assert not check_dilating(VectorFieldChart.coordinate(chart, "x1"), omega).ok
    assert not check_dilating(v.scale(ex.const(2)), omega).ok


def test_dilating_requires_closed_form():
    chart, _, v = standard_r4()
    with pytest.raises(PreconditionError):
        check_dilating(v, parse_form("x2*dx1^dy1", chart))


def test_sphere_boundary_form_is_contact():
    polar, omega, v, param = polar_r4()
    b = induced_boundary_form(v, omega, param)
    assert b.report.verdict == "positive-contact"
    assert b.identity_residual <= 1e-9


def test_domination():
    s3 = example("s3")
    polar, omega, v, param = polar_r4()
    from contactkit.forms import pullback

    assert weak_domination_check(pullback(param, omega), s3).ok
    chart = torus_chart()
    tilted = parse_form("dz + (1/10)*dx", chart)
    from contactkit.planefields import PlaneFieldChart

    assert weak_domination_check(parse_form("dx^dy", chart), PlaneFieldChart(tilted)).ok
    assert not weak_domination_check(parse_form("dx^dy", chart), PlaneFieldChart(parse_form("dy", chart))).ok


def test_interior_identity_random_closed_forms():
    rng = np.random.default_rng(7)
    chart, _, v = standard_r4()
    for _ in range(20):
        omega = random_closed_two_form(rng, chart)
        assert exterior_d(omega).max_norm(chart.grid(3)) <= 1e-12
        assert identity_residual(v, omega, random_points(chart, 100, rng)) <= 1e-9


def test_omega_squared_matches_pfaffian():
    rng = np.random.default_rng(3)
    chart, _, _ = standard_r4()
    omega = random_closed_two_form(rng, chart)
    pts = random_points(chart, 10, rng)
    sq = wedge(omega, omega)
    vals = omega.values(pts)
    c = {k: np.broadcast_to(x, (10,)) for k, x in vals.items()}
    get = lambda i, j: c.get((i, j), np.zeros(10))  # noqa: E731
    pf = get(0, 1) * get(2, 3) - get(0, 2) * get(1, 3) + get(0, 3) * get(1, 2)
    assert np.allclose(ex.evaluate_array(sq.density, chart.variables, pts), 2 * pf)
