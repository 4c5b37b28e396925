"""Acceptance criteria: one PASS/FAIL line per criterion, printed in the terminal summary."""

import math
import time

import numpy as np
import pytest

from contactkit.forms import parse_surface
from contactkit.mcg import OpenBook, cap_pipeline, chain_relation_word, hom_rep, parse_word
from contactkit.perturb import holonomy_contactize, monotone_graph_diffeo, radial_bump, tangent_arc_contactize
from contactkit.planefields import classify, example, normal_form
from contactkit.surfdyn import characteristic_foliation, classify_holonomy, holonomy_return_map, reeb_annulus
from contactkit.symplectic import identity_residual, random_points, standard_r4, taut_t3_example, weak_filling_form

from test_symplectic import random_closed_two_form

RESULTS = []


def record(label, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] {label}" + (f" -- {detail}" if detail else "")
    RESULTS.append(line)
    print(line)
    return ok


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


# 1. catalog classification ------------------------------------------------------

CATALOG_CASES = [
    ("xi1", {}, "foliation"),
    ("xi2", {}, "positive-contact"),
    ("xi3", {}, "negative-contact"),
    ("lutz", {"r_min": 0.1}, "positive-contact"),
    ("reeb", {}, "foliation"),
    ("t3", {"t": -0.2}, "negative-contact"),
    ("t3", {"t": 0.0}, "foliation"),
]


@pytest.mark.parametrize("name, params, verdict", CATALOG_CASES)
def test_c1_catalog(name, params, verdict):
    rep, dt = timed(lambda: classify(example(name, **params), 41))
    ok = rep.verdict == verdict and dt < 10
    if name == "reeb":
        ok = ok and max(abs(rep.min_density), abs(rep.max_density)) <= 1e-9
    record(f"1 catalog {name}{params or ''} -> {verdict}", ok, f"got {rep.verdict} in {dt:.2f}s")
    assert ok


@pytest.mark.xfail(strict=True, reason="alpha^d(alpha) = -2 pi n t^2 < 0 for every t != 0; "
                                        "positive at t = 0.2 is unattainable with this family")
def test_c1_catalog_t3_positive():
    rep = classify(example("t3", t=0.2), 41)
    ok = rep.verdict == "positive-contact"
    record("1 catalog t3{'t': 0.2} -> positive-contact", ok,
           f"got {rep.verdict}, density {rep.min_density:.6f} = -2*pi*t^2 (see decisions ledger)")
    assert ok


# 2. S^3 ------------------------------------------------------------------------


def test_c2_sphere():
    pf = example("s3")
    rep = classify(pf, (41, 41, 41))
    ok = rep.verdict == "positive-contact" and rep.min_density >= 1e-3
    record("2 S^3 restriction positive contact, density >= 1e-3", ok, f"min density {rep.min_density:.6f}")
    assert ok


# 3. Lutz disk singularities --------------------------------------------------------


def test_c3_lutz_disks():
    pf = example("lutz")
    dom = [(0.0, math.pi), (0.0, 2 * math.pi)]
    t0 = time.perf_counter()
    flat = parse_surface("u,v -> (u, v, 0)", pf.chart, dom, (False, True))
    fol = characteristic_foliation(pf, flat, seeds=8, max_steps=5000, tol=1e-7)
    last = fol.grid.shape[0] - 1
    flat_ok = fol.singular_rows(0) == [0, last] and fol.rows_with_singularities(0) == [0, last]
    pushed = parse_surface("u,v -> (u, v, (1/100)*(pi^2 - u^2))", pf.chart, dom, (False, True))
    fol2 = characteristic_foliation(pf, pushed, seeds=8, max_steps=5000, tol=1e-7)
    pushed_ok = len(fol2.singular) == 1
    dt = time.perf_counter() - t0
    ok = flat_ok and pushed_ok and dt < 30
    record("3 Lutz flat disk singular rows r in {0, pi}; pushed disk one singularity", ok,
           f"flat rows {fol.singular_rows(0)}, pushed {len(fol2.singular)} point(s), {dt:.1f}s")
    assert ok


# 4. Reeb holonomy ----------------------------------------------------------------


def test_c4_reeb_holonomy():
    pf = example("reeb")
    rm = holonomy_return_map(pf, reeb_annulus(pf))
    cls = classify_holonomy(rm)
    err = abs(rm.derivative - math.exp(-1))
    ok = err <= 1e-3 and cls.linear and cls.kind == "attracting"
    record("4 Reeb holonomy derivative e^-1, linear and attracting", ok,
           f"phi'(0) = {rm.derivative:.12f}, |error| = {err:.1e}, labels {cls.labels}")
    assert ok


# 5. perturbation operators ---------------------------------------------------------


def test_c5a_holonomy_perturbation():
    r = holonomy_contactize("-z", radial_bump("(1-u)^2"))
    chart = r.plane_field.chart
    g = chart.grid(41)
    x, y, z = g.points()
    out = y**2 + z**2 >= 1
    new = r.plane_field.form.on_grid(g)
    old = normal_form("-z", chart).form.on_grid(g)
    same = all(
        np.array_equal(np.broadcast_to(new.get(k, 0.0), (g.size,))[out], np.broadcast_to(old.get(k, 0.0), (g.size,))[out])
        for k in set(new) | set(old)
    )
    ok = r.after.verdict == "positive-contact" and r.after.min_density >= 1e-6 and same
    record("5a holonomy_contactize(a=-z, h=(1-u)^2) contact on y^2+z^2<0.95, unchanged outside", ok,
           f"min density {r.after.min_density:.3e}, bit-identical outside: {same}")
    assert ok


def test_c5b_tangent_arc():
    r = tangent_arc_contactize("pos(y - 1/2)^3", t=0.05)
    ok = r.after.verdict == "positive-contact"
    record("5b tangent_arc_contactize on q(y) = pos(y-1/2)^3: interior positive contact", ok,
           f"t = {r.value}, attempts {r.attempts}, min density {r.after.min_density:.3e}")
    assert ok


def test_c5c_monotone_diffeo():
    rng = np.random.default_rng(0)
    coeffs = rng.uniform([0.1, 0.0, 0.0], [3.0, 2.0, 1.0], (10, 3))
    fam = [lambda z, a=a, b=b, c=c: a * z + b * z**3 + c * np.sin(z) for a, b, c in coeffs]
    d = monotone_graph_diffeo(fam)
    z = d.z[1:-1]
    fz, dfz = d.fz[1:-1], d.dfz[1:-1]
    gap = min(float(np.min(dfz * v(z) - v(fz))) for v in fam)
    ok = gap > 0
    record("5c monotone_graph_diffeo: f'(z) v(z) > v(f(z)) at every sample, 10 random members", ok,
           f"c = {d.c}, min gap {gap:.3e}")
    assert ok


# 6. symplectic certificate ---------------------------------------------------------


def test_c6_symplectic():
    alpha, v, Omega = taut_t3_example()
    eps = 0.5
    cert = weak_filling_form(alpha, v, Omega, eps=eps)
    rel = max(abs(cert.omega_squared_min - 2 * eps), abs(cert.omega_squared_max - 2 * eps)) / (2 * eps)
    rng = np.random.default_rng(0)
    chart, _, field = standard_r4()
    worst = 0.0
    for _ in range(20):
        omega = random_closed_two_form(rng, chart)
        worst = max(worst, identity_residual(field, omega, random_points(chart, 100, rng)))
    ok = cert.valid and cert.d_omega_norm <= 1e-12 and rel <= 1e-9 and worst <= 1e-9
    record("6 T^3 filling certificate and (i_v w)^w = 1/2 i_v(w^w)", ok,
           f"valid {cert.valid}, |dw| {cert.d_omega_norm:.1e}, w^w rel err {rel:.1e}, identity residual {worst:.1e}")
    assert ok


# 7. chain relation ---------------------------------------------------------------


def test_c7_chain_relation():
    t0 = time.perf_counter()
    ident = all(hom_rep(chain_relation_word(g)).is_identity() for g in (1, 2, 3))
    base = hom_rep(parse_word("g1*g2", 1))
    dt = time.perf_counter() - t0
    ok = ident and base.tolist() == [[0, -1], [1, 1]] and base.order() == 6 and dt < 1
    record("7 chain relation identity for g=1,2,3; base [[0,-1],[1,1]] of order 6", ok,
           f"order {base.order()}, {dt:.3f}s")
    assert ok


# 8. cap pipeline -----------------------------------------------------------------


def test_c8_cap_pipeline():
    t0 = time.perf_counter()
    problems = []
    for g in (1, 2, 3):
        for m in (0, 1, 2):
            word = f"c^{m}*s1^-1" if m else "s1^-1"
            p = cap_pipeline(OpenBook.parse(g, word))
            again = cap_pipeline(OpenBook.parse(g, word))
            checks = {
                "stage1": p.stage("1").word.exponent_sum("c") == m and len(p.stage("1").word) == m,
                "stage2": p.stage("2").det == 1,
                "stage3": p.stage("3").word.to_text() == ("c" if m == 0 else f"c^{m + 1}"),
                "stated count": p.stage3_stated == 8 * g * g + 3 * g,
                "stage4": p.stage4_certified,
                "cap": p.sequence.cap.euler_number == 1,
                "deterministic": p.to_dict() == again.to_dict(),
            }
            problems += [f"g={g} m={m} {k}" for k, v in checks.items() if not v]
    dt = time.perf_counter() - t0
    ok = not problems and dt < 1
    record("8 cap pipeline g in {1,2,3}, m in {0,1,2}", ok,
           f"{dt:.3f}s; stage-3 handles computed (4g+1)2g, stated 8g^2+3g reported beside"
           + (f"; failures {problems}" if problems else ""))
    assert ok


# 9. property suites ----------------------------------------------------------------


def _suite(label, fn):
    try:
        fn()
    except Exception as err:  # noqa: BLE001
        record(f"9 property: {label} (1000 cases)", False, repr(err)[:200])
        raise
    record(f"9 property: {label} (1000 cases)", True)


def test_c9_d_squared():
    from test_forms import test_d_squared_vanishes

    _suite("d o d = 0", test_d_squared_vanishes)


def test_c9_leibniz():
    from test_forms import test_graded_leibniz

    _suite("graded Leibniz", test_graded_leibniz)


def test_c9_round_trip():
    from test_expr import test_print_parse_round_trip

    _suite("parse/print round trip", test_print_parse_round_trip)


def test_c9_reduce():
    from test_mcg import test_reduce_preserves_hom_rep

    _suite("hom_rep o word_reduce invariance", test_reduce_preserves_hom_rep)


def test_c9_scaling():
    from test_planefields import test_verdict_invariant_under_positive_rescaling

    _suite("classify invariant under positive rescaling", test_verdict_invariant_under_positive_rescaling)


def test_c9_double_loop():
    from test_surfdyn import test_double_loop_is_composition

    _suite("holonomy double loop = composition (10x tol)", test_double_loop_is_composition)
