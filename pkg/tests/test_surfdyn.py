import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contactkit import expr as ex
from contactkit.errors import InputError, PreconditionError
from contactkit.forms import ChartMap, parse_surface
from contactkit.planefields import PlaneFieldChart, example
from contactkit.surfdyn import (
    TransverseAnnulus,
    characteristic_foliation,
    classify_holonomy,
    fixed_point_derivative,
    holonomy_return_map,
    reeb_annulus,
    sampled_return_map,
    streamline_residuals,
)

LOOP_CHART = ex.make_chart("L", ("x", "y", "z"), [(0.0, 1.0), (0.0, 1.0), (-0.5, 0.5)], periodic=(True, True, False))


def lutz_disk(height=None):
    pf = example("lutz")
    text = "u,v -> (u, v, 0)" if height is None else f"u,v -> (u, v, {height}*(pi^2 - u^2))"
    patch = parse_surface(text, pf.chart, [(0.0, math.pi), (0.0, 2 * math.pi)], (False, True))
    return pf, patch


def test_flat_lutz_disk_singular_rows():
    pf, patch = lutz_disk()
    fol = characteristic_foliation(pf, patch, seeds=4, max_steps=2000)
    assert fol.singular_rows(0) == [0, 80]
    assert fol.rows_with_singularities(0) == [0, 80]


def test_pushed_lutz_disk_single_singularity():
    pf, patch = lutz_disk("(1/100)")
    fol = characteristic_foliation(pf, patch, seeds=4, max_steps=2000)
    assert len(fol.singular) == 1
    assert fol.singular[0].u == 0.0
    assert fol.rows_with_singularities(0) == [0]


def test_streamlines_are_tangent_to_line_field():
    pf, patch = lutz_disk("(1/100)")
    fol = characteristic_foliation(pf, patch, seeds=9, max_steps=3000)
    for line in fol.streamlines:
        assert np.max(streamline_residuals(fol, line)) <= 1e-7


def test_surface_must_target_plane_field_chart():
    pf = example("xi2")
    other = example("lutz")
    patch = parse_surface("u,v -> (u, v, 0)", other.chart, [(0.1, 1.0), (0.0, 1.0)])
    with pytest.raises(InputError):
        characteristic_foliation(pf, patch)


def test_reeb_holonomy_matches_exponential():
    # induced form ds + s dp on the annulus: phi(x) = x exp(-1)
    pf = example("reeb")
    rm = holonomy_return_map(pf, reeb_annulus(pf))
    assert rm.derivative == pytest.approx(math.exp(-1), abs=1e-9)
    assert np.allclose(rm.y, rm.x * math.exp(-1), atol=1e-10)
    assert abs(rm.phi0) <= 1e-12
    cls = classify_holonomy(rm)
    assert cls.linear and cls.kind == "attracting"


def test_reversed_loop_inverts_map():
    pf = example("reeb")
    ann = reeb_annulus(pf)
    fwd = holonomy_return_map(pf, ann, seeds=np.linspace(-0.1, 0.1, 21))
    back = holonomy_return_map(pf, ann, direction=-1, seeds=fwd.y)
    assert np.allclose(back.y, fwd.x, atol=1e-9)


def test_holonomy_requires_foliation():
    pf = example("xi2")
    src = ex.make_chart("annulus", ("s", "p"), [(-0.1, 0.1), (-1.0, 1.0)], periodic=(False, True))
    ann = TransverseAnnulus(ChartMap(src, pf.chart, (src.var("p"), ex.ZERO, src.var("s"))))
    with pytest.raises(PreconditionError):
        holonomy_return_map(pf, ann)


def test_annulus_tangent_to_leaves_rejected():
    pf = example("xi1")
    src = ex.make_chart("annulus", ("s", "p"), [(-0.1, 0.1), (-1.0, 1.0)], periodic=(False, True))
    ann = TransverseAnnulus(ChartMap(src, pf.chart, (src.var("p"), src.var("s"), ex.ZERO)))
    with pytest.raises(PreconditionError):
        holonomy_return_map(pf, ann)


def test_cubic_map_attracting_not_linear():
    rm = sampled_return_map(np.linspace(-0.3, 0.3, 41), lambda x: x - x**3)
    cls = classify_holonomy(rm)
    assert cls.kind == "attracting" and not cls.linear
    assert rm.derivative == pytest.approx(1.0, abs=1e-6)


def test_identity_map_trivial():
    cls = classify_holonomy(sampled_return_map(np.linspace(-0.3, 0.3, 41), lambda x: x))
    assert cls.kind == "trivial" and not cls.linear


def test_too_few_samples():
    with pytest.raises(InputError):
        classify_holonomy(sampled_return_map(np.linspace(0.01, 0.3, 5), lambda x: 0.5 * x))


def test_neville_exact_on_quadratics():
    xs = np.array([-0.2, -0.1, 0.05, 0.1, 0.3])
    assert fixed_point_derivative(xs, 1.7 * xs + 2 * xs**2 - xs**3) == pytest.approx(1.7, abs=1e-12)


def twisted_leaf_family(k, b):
    # ker(dz + k (1 + b sin(2 pi y)) z dy): integrable, holonomy x -> x exp(-k)
    pf = PlaneFieldChart.parse(f"dz + {k}*(1 + {b}*sin(2*pi*y))*z*dy", LOOP_CHART)
    src = ex.make_chart("annulus", ("s", "p"), [(-0.4, 0.4), (0.0, 1.0)], periodic=(False, True))
    ann = TransverseAnnulus(ChartMap(src, LOOP_CHART, (ex.ZERO, src.var("p"), src.var("s"))))
    return pf, ann


def test_twisted_family_closed_form():
    pf, ann = twisted_leaf_family(0.5, 0.7)
    rm = holonomy_return_map(pf, ann, seeds=np.linspace(-0.1, 0.1, 21))
    assert np.allclose(rm.y, rm.x * math.exp(-0.5), atol=1e-10)


@settings(max_examples=1000, deadline=None)
@given(
    st.floats(-1.0, 1.0),
    st.floats(-0.9, 0.9),
    st.lists(st.floats(-0.05, 0.05), min_size=1, max_size=4),
)
def test_double_loop_is_composition(k, b, seeds):
    pf, ann = twisted_leaf_family(round(k, 3), round(b, 3))
    xs = np.array(seeds)
    once = holonomy_return_map(pf, ann, seeds=xs, step=1e-2, check=False)
    twice = holonomy_return_map(pf, ann, seeds=xs, loops=2, step=1e-2, check=False)
    assert np.allclose(twice.y, once(once.y), rtol=0, atol=10 * once.tol)
