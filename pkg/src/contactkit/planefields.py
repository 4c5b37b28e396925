"""Plane fields ``ker(alpha)`` on 3-charts and their contact/foliation type."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .errors import DegreeError, DomainError, InputError
from .forms import (
    MARGIN,
    ZERO_TOL,
    ChartMap,
    KForm,
    exterior_d,
    extend,
    parse_form,
    pullback,
    wedge,
)

VERDICTS = (
    "positive-contact",
    "negative-contact",
    "foliation",
    "positive-confoliation",
    "negative-confoliation",
    "mixed",
)


@dataclass
class PlaneFieldChart:
    form: KForm
    label: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.form.degree != 1:
            raise DegreeError("a plane field is the kernel of a 1-form")
        if self.form.chart.dim != 3:
            raise DegreeError("plane fields live on 3-dimensional charts")

    @property
    def chart(self):
        return self.form.chart

    @classmethod
    def parse(cls, text, chart, label=""):
        return cls(parse_form(text, chart), label or text)

    def check_nonvanishing(self, grid, tol=ZERO_TOL):
        vals = self.form.on_grid(grid)
        stack = np.stack([np.broadcast_to(v, (grid.size,)) for v in vals.values()]) if vals else np.zeros((1, grid.size))
        norm = np.max(np.abs(stack), axis=0)
        bad = norm <= tol
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            where = {v: float(p[k]) for v, p in zip(grid.chart.variables, grid.points())}
            raise DomainError(f"the 1-form vanishes at {where}; the plane field is undefined there")
        return float(norm.min())

    def scaled(self, factor):
        return PlaneFieldChart(self.form.scale(factor), self.label, dict(self.params))

    def reoriented(self, i=0, j=1):
        """The same plane field on the chart with variables ``i`` and ``j`` swapped."""
        chart = self.chart.swapped(i, j)
        return PlaneFieldChart(extend(self.form, chart), self.label + "~", dict(self.params))


@dataclass
class ClassificationReport:
    verdict: str
    density: KForm
    min_density: float
    max_density: float
    margin: float
    zero_tol: float
    scale: float
    grid: dict
    points: int

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "density": self.density.to_text(),
            "min_density": self.min_density,
            "max_density": self.max_density,
            "margin": self.margin,
            "zero_tol": self.zero_tol,
            "scale": self.scale,
            "grid": self.grid,
            "points": self.points,
        }


def contact_density(pf):
    """The 3-form ``alpha ^ d(alpha)``."""
    alpha = pf.form
    return wedge(alpha, exterior_d(alpha))


def _verdict(lo, hi, margin, zero):
    if lo >= margin:
        return "positive-contact"
    if hi <= -margin:
        return "negative-contact"
    if max(abs(lo), abs(hi)) <= zero:
        return "foliation"
    if lo >= -zero and hi >= margin:
        return "positive-confoliation"
    if hi <= zero and lo <= -margin:
        return "negative-confoliation"
    return "mixed"


def _as_grid(pf, grid, domain=None, interior=False, inset=1e-3):
    if isinstance(grid, ex.Grid):
        return grid
    n = grid
    if np.isscalar(n) and n < 3:
        raise InputError("grid resolution must be at least 3 per axis")
    return pf.chart.grid(n, inset=inset, interior=interior, domain=domain)


def _density_on(pf, grid, region):
    density = contact_density(pf)
    values = density.density_values(grid)
    pts = grid.points()
    if region is not None:
        mask = np.broadcast_to(np.asarray(region(*pts), dtype=bool), (grid.size,))
        if not mask.any():
            raise InputError("region selects no grid points")
    else:
        mask = np.ones(grid.size, dtype=bool)
    return density, values, mask


def _scale(pf, grid, mask):
    a = pf.form.on_grid(grid)
    da = exterior_d(pf.form).on_grid(grid)
    amax = max((float(np.max(np.abs(np.broadcast_to(v, (grid.size,))[mask]))) for v in a.values()), default=0.0)
    dmax = max((float(np.max(np.abs(np.broadcast_to(v, (grid.size,))[mask]))) for v in da.values()), default=0.0)
    return amax * dmax


def classify(pf, grid=41, margin=MARGIN, zero_tol=ZERO_TOL, domain=None, region=None, interior=False, inset=1e-3):
    """Contact/foliation/confoliation verdict from the sign of ``alpha ^ d alpha`` on a grid.

    ``region`` is an optional predicate on the coordinate arrays restricting
    the verdict to a subset of the grid. "Zero" means
    ``|density| <= zero_tol * (1 + scale)`` with ``scale = max|alpha| * max|d alpha|``.
    """
    g = _as_grid(pf, grid, domain, interior, inset)
    pf.check_nonvanishing(g)
    density, values, mask = _density_on(pf, g, region)
    sel = values[mask]
    lo, hi = float(sel.min()), float(sel.max())
    scale = _scale(pf, g, mask)
    zero = zero_tol * (1.0 + scale)
    spec = g.spec()
    if region is not None:
        spec["region_points"] = int(mask.sum())
    return ClassificationReport(_verdict(lo, hi, margin, zero), density, lo, hi, margin, zero_tol, scale, spec, int(mask.sum()))


def contact_region(pf, grid=41, margin=MARGIN, domain=None, interior=False, inset=1e-3):
    """Grid points where the plane field is (positively) contact, as an ``(N, 3)`` array."""
    g = _as_grid(pf, grid, domain, interior, inset)
    pf.check_nonvanishing(g)
    values = contact_density(pf).density_values(g)
    pts = np.stack(g.points(), axis=1)
    return pts[values >= margin]


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------

TAU = 2 * math.pi


def cube_chart(name="R3", half=1.0, variables=("x", "y", "z")):
    return ex.make_chart(name, variables, [(-half, half)] * 3)


def cylindrical_chart(r_max=math.pi, r_min=0.0, name="cyl"):
    return ex.make_chart(
        name,
        ("r", "theta", "z"),
        [(r_min, r_max), (0.0, TAU), (0.0, 1.0)],
        periodic=(False, True, True),
        singular=[("r", 0.0)],
        cartesian=("r*cos(theta)", "r*sin(theta)", "z"),
    )


def torus_chart(name="T3"):
    return ex.make_chart(name, ("x", "y", "z"), [(0.0, 1.0)] * 3, periodic=(True, True, True))


def normal_form(a, chart=None, label=""):
    """``ker(dz - a dx)``; positive contact exactly where ``da/dy > 0``."""
    chart = chart or cube_chart()
    if isinstance(a, str):
        a = ex.parse_expr(a, chart)
    a = ex.check_chart(ex.const(a) if not isinstance(a, ex.Expr) else a, chart)
    form = KForm.basis(chart, "z") - KForm.basis(chart, "x").scale(a)
    return PlaneFieldChart(form, label or f"dz - ({ex.to_text(a)}) dx", {"a": ex.to_text(a)})


def reeb_profile(kind="linear"):
    """The decreasing profile ``g`` with ``g(0)=1`` and ``g(1)=0`` as a function of ``u``."""
    u = ex.Var("u")
    if kind == "linear":
        return 1 - u
    if kind == "smooth":
        return ex.E * ex.exp(ex.neg(1 / (1 - u)))
    raise InputError(f"unknown Reeb profile {kind!r} (use 'linear' or 'smooth')")


def reeb_form(chart, kind="linear"):
    """``e^{-z} df`` for ``f = g(x^2+y^2) e^z``: ``2x g' dx + 2y g' dy + g dz``."""
    x, y = chart.var("x"), chart.var("y")
    g = reeb_profile(kind)
    u = x**2 + y**2
    gu = ex.substitute(g, {"u": u})
    dg = ex.substitute(ex.partial(g, "u"), {"u": u})
    return KForm.one_form(chart, [2 * x * dg, 2 * y * dg, gu])


def s3_ambient():
    """Polar 4-chart ``(r1, theta1, r2, theta2)``, the form ``r1^2 dtheta1 + r2^2 dtheta2``
    and the unit-sphere parametrization ``(phi, theta2, theta1)``.

    The parameter order ``(phi, theta2, theta1)`` is the boundary orientation
    of the unit ball.
    """
    polar = ex.make_chart(
        "C2polar",
        ("r1", "theta1", "r2", "theta2"),
        [(0.0, 2.0), (0.0, TAU), (0.0, 2.0), (0.0, TAU)],
        periodic=(False, True, False, True),
        singular=[("r1", 0.0), ("r2", 0.0)],
    )
    alpha = parse_form("r1^2*dtheta1 + r2^2*dtheta2", polar)
    sphere = ex.make_chart(
        "S3",
        ("phi", "theta2", "theta1"),
        [(0.0, math.pi / 2), (0.0, TAU), (0.0, TAU)],
        periodic=(False, True, True),
        singular=[("phi", 0.0), ("phi", math.pi / 2)],
    )
    phi = sphere.var("phi")
    param = ChartMap(sphere, polar, (ex.cos(phi), sphere.var("theta1"), ex.sin(phi), sphere.var("theta2")))
    return polar, alpha, param


def example(name, **params):
    """Named plane fields on their canonical charts.

    ``xi1``, ``xi2``, ``xi3``; ``lutz`` (``r_min``, ``r_max``); ``reeb``
    (``profile='linear'|'smooth'``); ``t3`` (``t``, ``n``); ``s3``.
    """
    if name in ("xi1", "xi2", "xi3"):
        chart = cube_chart()
        text = {"xi1": "dz", "xi2": "dz - y*dx", "xi3": "dz + y*dx"}[name]
        return PlaneFieldChart(parse_form(text, chart), name)
    if name == "lutz":
        chart = cylindrical_chart(params.get("r_max", math.pi), params.get("r_min", 0.0))
        return PlaneFieldChart(parse_form("cos(r)*dz + r*sin(r)*dtheta", chart), "lutz", dict(params))
    if name == "reeb":
        kind = params.get("profile", "linear")
        half = 1.5 if kind == "linear" else 0.6
        chart = ex.make_chart("reeb", ("x", "y", "z"), [(-half, half), (-half, half), (0.0, 1.0)],
                              periodic=(False, False, True))
        return PlaneFieldChart(reeb_form(chart, kind), "reeb", {"profile": kind})
    if name == "t3":
        t = params.get("t", 0.2)
        n = params.get("n", 1)
        chart = torus_chart()
        z = chart.var("z")
        phase = ex.const(n) * 2 * ex.pi * z
        tt = ex.const(t)
        form = KForm.one_form(chart, [tt * ex.cos(phase), tt * ex.sin(phase), ex.ONE])
        return PlaneFieldChart(form, f"t3(t={t}, n={n})", {"t": t, "n": n})
    if name == "s3":
        _, alpha, param = s3_ambient()
        return PlaneFieldChart(pullback(param, alpha), "s3")
    raise InputError(f"unknown example {name!r}; known: xi1, xi2, xi3, lutz, reeb, t3, s3")


CATALOG = ("xi1", "xi2", "xi3", "lutz", "reeb", "t3", "s3")


def adjunction_check(pairing, genus):
    """Euler-class bound for a surface of the given genus: ``|<e, S>| <= -chi(S)`` (0 on spheres)."""
    if genus < 0:
        raise InputError("genus must be non-negative")
    if genus == 0:
        return pairing == 0
    return abs(pairing) <= 2 * genus - 2


__all__ = [
    "VERDICTS",
    "PlaneFieldChart",
    "ClassificationReport",
    "contact_density",
    "classify",
    "contact_region",
    "cube_chart",
    "cylindrical_chart",
    "torus_chart",
    "normal_form",
    "reeb_profile",
    "reeb_form",
    "s3_ambient",
    "example",
    "CATALOG",
    "adjunction_check",
]
