import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from contactkit import expr as ex
from contactkit.errors import PreconditionError
from contactkit.perturb import (
    CutoffSpec,
    build_f,
    check_f,
    holonomy_chart,
    holonomy_contactize,
    interp_chart,
    interpolate_plane_fields,
    monotone_graph_diffeo,
    plateau_cutoff,
    pulled_back_slope,
    radial_bump,
    shear_annulus,
    shear_foliation,
    smoothstep,
    tangent_arc_contactize,
)
from contactkit.planefields import classify, normal_form
from contactkit.surfdyn import classify_holonomy, holonomy_return_map


def test_plateau_cutoff_values():
    g = plateau_cutoff(0.25)
    assert np.allclose(g(np.array([0.0, 0.5, 0.75])), 1.0)
    assert np.allclose(g(np.array([1.0, 1.5])), 0.0)


def test_smoothstep_endpoints():
    s = smoothstep(ex.Var("w"))
    vals = ex.evaluate_array(s, ("w",), (np.array([-1.0, 0.0, 0.5, 1.0, 2.0]),))
    assert np.allclose(vals, [0, 0, 0.5, 1, 1])


def test_cutoff_property_violation():
    with pytest.raises(PreconditionError):
        CutoffSpec("bad", "w^2", "w", (0.0, 1.0), (("decreasing", 0.0, 1.0),))


def test_build_f_properties():
    assert check_f(build_f(1.0, 0.25, 0.1), 1.0, 0.25, 0.1)["ok"]
    assert check_f(build_f(0.05, 0.2, 0.3), 0.05, 0.2, 0.3)["ok"]


def test_tangent_arc_becomes_contact():
    r = tangent_arc_contactize("pos(y - 1/2)^3", t=0.05)
    assert r.before.verdict == "positive-confoliation"
    assert r.after.verdict == "positive-contact"
    assert r.value == 0.05


def test_tangent_arc_zero_parameter_is_identity():
    r = tangent_arc_contactize("pos(y - 1/2)^3", t=0.0)
    assert r.plane_field.form == normal_form("pos(y - 1/2)^3", r.plane_field.chart).form


def test_tangent_arc_monotone_in_t():
    from contactkit.perturb import arc_chart, tangent_arc_form

    chart = arc_chart()
    a = ex.parse_expr("pos(y - 1/2)^3", chart)
    g = chart.grid(11, interior=True)
    d1 = classify(normal_form(tangent_arc_form(a, 0.05, plateau_cutoff(), build_f(), chart), chart), g).density
    d2 = classify(normal_form(tangent_arc_form(a, 0.025, plateau_cutoff(), build_f(), chart), chart), g).density
    v1, v2 = d1.density_values(g), d2.density_values(g)
    base = classify(normal_form(a, chart), g).density.density_values(g)
    # the added term t g g f' scales linearly in t
    assert np.allclose(v1 - base, 2 * (v2 - base), atol=1e-12)


def test_tangent_arc_needs_confoliation():
    with pytest.raises(PreconditionError):
        tangent_arc_contactize("-y")


def test_holonomy_perturbation_contact_on_disk():
    r = holonomy_contactize("-z", radial_bump("(1-u)^2"))
    assert r.after.verdict == "positive-contact"
    assert r.after.min_density >= 1e-6


def test_holonomy_perturbation_untouched_outside_disk():
    r = holonomy_contactize("-z", radial_bump("(1-u)^2"))
    chart = holonomy_chart()
    g = chart.grid(31)
    x, y, z = g.points()
    out = y**2 + z**2 >= 1
    base = normal_form("-z", chart).form
    new, old = r.plane_field.form.on_grid(g), base.on_grid(g)
    for k in set(new) | set(old):
        a = np.broadcast_to(new.get(k, 0.0), (g.size,))[out]
        b = np.broadcast_to(old.get(k, 0.0), (g.size,))[out]
        assert np.array_equal(a, b)


def test_holonomy_needs_leaf_loop():
    with pytest.raises(PreconditionError):
        holonomy_contactize("-z + 1/10")


def test_shear_holonomy_one_sided_linear():
    pf = shear_foliation()
    ann = shear_annulus(pf, 0.0, 0.1)
    rm = holonomy_return_map(pf, ann, seeds=np.linspace(-0.015, 0.015, 41))
    cls = classify_holonomy(rm)
    # z > 0: dz/dy = 2 g(y) z near the loop, so phi'(0+) = exp(2 * int g)
    oracle = math.exp(2 * quad(lambda y: (1 - y * y) ** 4, -1, 1)[0])
    assert cls.sides == {"+": "repelling", "-": "trivial"}
    assert cls.side_derivatives["+"] == pytest.approx(oracle, rel=1e-3)
    assert cls.side_derivatives["-"] == pytest.approx(1.0, abs=1e-9)
    assert cls.linear


def test_shear_holonomy_reversed_is_attracting():
    pf = shear_foliation()
    rm = holonomy_return_map(pf, shear_annulus(pf, 0.0, 0.1), direction=-1, seeds=np.linspace(-0.015, 0.015, 41))
    assert classify_holonomy(rm).sides["+"] == "attracting"


def test_interpolation_positive_contact():
    r = interpolate_plane_fields("-z", "-z + 1/2")
    assert r.after.verdict == "positive-contact"


def test_interpolation_rejects_decreasing_endpoints():
    with pytest.raises(PreconditionError):
        interpolate_plane_fields("-z", "-z - 0.2")


def test_interpolation_with_pulled_back_slope():
    # holonomy normal form a0 = -z, so the diffeo family is v = -a0 = z
    d = monotone_graph_diffeo(["z"], eps=0.5)
    chart = interp_chart()
    a0 = ex.parse_expr("-z", chart)
    a1 = pulled_back_slope(a0, d, chart)
    g = chart.grid(21)
    gap = np.broadcast_to(ex.eval_grid(a1 - a0, g), (g.size,))
    inside = np.abs(g.points()[2]) < 0.5
    assert gap[inside].min() > 0


def test_diffeo_identity_outside_support():
    d = monotone_graph_diffeo(["z", "sin(z)"], eps=0.4)
    z = np.linspace(-1, 1, 201)
    out = np.abs(z) >= 0.4
    assert np.allclose(d(z)[out], z[out], atol=0)


def test_diffeo_rejects_nonvanishing():
    with pytest.raises(PreconditionError):
        monotone_graph_diffeo(["z + 1"])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(0.1, 3.0), st.floats(0.0, 2.0), st.floats(0.0, 1.0)), min_size=1, max_size=10))
def test_diffeo_inequality_random_family(coeffs):
    fam = [lambda z, a=a, b=b, c=c: a * z + b * z**3 + c * np.sin(z) for a, b, c in coeffs]
    d = monotone_graph_diffeo(fam)
    z = d.z
    f = z - d.c * (1 - z**2) ** 2
    df = 1 + 4 * d.c * z * (1 - z**2)
    inner = (z > -1) & (z < 1)
    assert np.all(df > 0)
    for v in fam:
        assert np.all(df[inner] * v(z[inner]) > v(f[inner]))


def test_interpolation_end_to_end_with_diffeo():
    chart = interp_chart()
    a0 = ex.parse_expr("-z", chart)
    d = monotone_graph_diffeo(["z"])
    r = interpolate_plane_fields(a0, pulled_back_slope(a0, d, chart), chart)
    assert r.after.verdict == "positive-contact"
