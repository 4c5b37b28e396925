import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contactkit import expr as ex
from contactkit.errors import DomainError
from contactkit.planefields import (
    PlaneFieldChart,
    adjunction_check,
    classify,
    contact_density,
    contact_region,
    example,
    normal_form,
)

from conftest import expressions


@pytest.mark.parametrize(
    "name, params, verdict",
    [
        ("xi1", {}, "foliation"),
        ("xi2", {}, "positive-contact"),
        ("xi3", {}, "negative-contact"),
        ("lutz", {"r_min": 0.1}, "positive-contact"),
        ("reeb", {}, "foliation"),
        ("reeb", {"profile": "smooth"}, "foliation"),
        ("s3", {}, "positive-contact"),
    ],
)
def test_catalog_verdicts(name, params, verdict):
    assert classify(example(name, **params), 21).verdict == verdict


@pytest.mark.parametrize("t", [-0.3, -0.2, 0.1, 0.2])
@pytest.mark.parametrize("n", [1, 2])
def test_t3_density_closed_form(t, n):
    # alpha = t cos(2 pi n z) dx + t sin(2 pi n z) dy + dz
    # alpha ^ d alpha = -2 pi n t^2, constant in space
    pf = example("t3", t=t, n=n)
    rep = classify(pf, 11)
    expected = -2 * math.pi * n * t * t
    assert rep.min_density == pytest.approx(expected, rel=1e-12)
    assert rep.max_density == pytest.approx(expected, rel=1e-12)


def test_t3_zero_is_foliation():
    assert classify(example("t3", t=0.0), 11).verdict == "foliation"


def test_lutz_density_oracle():
    # (cos r dz + r sin r dtheta) ^ d(...) = (r + sin r cos r) dr^dtheta^dz
    pf = example("lutz", r_min=0.1)
    g = pf.chart.grid(9)
    r = g.points()[0]
    assert np.allclose(contact_density(pf).density_values(g), r + np.sin(r) * np.cos(r))


def test_reoriented_chart_flips_sign():
    assert classify(example("xi2").reoriented(0, 1), 11).verdict == "negative-contact"


def test_negated_form_keeps_verdict():
    pf = example("xi2")
    assert classify(pf.scaled(ex.const(-1)), 11).verdict == "positive-contact"


def test_vanishing_form_rejected():
    chart = ex.make_chart("C", ("x", "y", "z"), [(-1.0, 1.0)] * 3)
    pf = PlaneFieldChart.parse("x*dz", chart)
    with pytest.raises(DomainError):
        classify(pf, 5)


def test_confoliation_and_mixed():
    assert classify(normal_form("pos(y)^3"), 21).verdict == "positive-confoliation"
    assert classify(normal_form("-pos(y)^3"), 21).verdict == "negative-confoliation"
    assert classify(normal_form("y^2"), 21).verdict == "mixed"


def test_region_restricts_verdict():
    pf = normal_form("y^2")
    rep = classify(pf, 21, region=lambda x, y, z: y > 0.2)
    assert rep.verdict == "positive-contact"


def test_contact_region_of_tangent_arc_slope():
    pf = normal_form("pos(y - 1/2)^3")
    pts = contact_region(pf, 21)
    assert len(pts) and pts[:, 1].min() > 0.5


def test_adjunction():
    assert adjunction_check(0, 0) and not adjunction_check(2, 0)
    assert adjunction_check(2, 2) and not adjunction_check(3, 2)


BASES = [example("xi1"), example("xi2"), example("xi3"), example("lutz", r_min=0.1)]
VERDICTS = [classify(pf, 7).verdict for pf in BASES]


@settings(max_examples=1000, deadline=None)
@given(st.integers(0, len(BASES) - 1), expressions(("x", "y", "z"), 4))
def test_verdict_invariant_under_positive_rescaling(k, e):
    pf = BASES[k]
    e = ex.substitute(e, dict(zip(("x", "y", "z"), pf.chart.coords())))
    factor = ex.const(2) + ex.sin(e)
    assert classify(pf.scaled(factor), 7).verdict == VERDICTS[k]
