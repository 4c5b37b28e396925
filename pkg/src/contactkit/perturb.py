"""Perturbation operators turning foliations and confoliations into contact structures.

Every operator is built from explicit cutoff functions, verifies its
hypotheses on grids and checks its output with :func:`planefields.classify`.
Parameters that the theory only asks to be "small enough" are found by
halving scans with a fixed retry budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import expr as ex
from .errors import InputError, PreconditionError, VerificationError
from .forms import MARGIN, ZERO_TOL, KForm
from .planefields import PlaneFieldChart, classify, normal_form

T_ATTEMPTS = 20
C_ATTEMPTS = 30


# ---------------------------------------------------------------------------
# Cutoff functions
# ---------------------------------------------------------------------------


def clamp01(u):
    """``min(max(u, 0), 1)`` written with ``pos`` so it stays an expression tree."""
    return ex.pos(u) - ex.pos(u - 1)


def smoothstep(u):
    """Quintic smoothstep of ``clamp01(u)``: 0 for u <= 0, 1 for u >= 1, C^2 at both ends."""
    c = clamp01(u)
    return 6 * c**5 - 15 * c**4 + 10 * c**3


@dataclass
class CutoffSpec:
    """A one-variable function with declared properties, checked on construction.

    ``properties`` entries are tuples:

    * ``("equals", lo, hi, value)``
    * ``("positive"|"negative"|"nonneg"|"nonpos", lo, hi)`` (open interval)
    * ``("increasing"|"decreasing", lo, hi)`` strict on the open interval
    * ``("bounded", lo, hi, bound)`` with ``|f| <= bound``
    * ``("flat", point, order)`` derivatives of order ``0..order`` vanish at ``point``
    * ``("value", point, value)``
    """

    name: str
    expr: ex.Expr
    var: str = "w"
    interval: tuple = (0.0, 1.0)
    properties: tuple = ()
    samples: int = 2001
    tol: float = 1e-12
    report: dict = field(default_factory=dict)

    def __post_init__(self):
        if isinstance(self.expr, str):
            chart = ex.make_chart("cutoff", [self.var], [self.interval])
            self.expr = ex.parse_expr(self.expr, chart)
        extra = ex.free_vars(self.expr) - {self.var}
        if extra:
            raise InputError(f"cutoff {self.name!r} depends on {sorted(extra)} besides {self.var!r}")
        self.verify()

    def __call__(self, x):
        return ex.evaluate_array(self.expr, (self.var,), (np.asarray(x, dtype=float),))

    def derivative(self, order=1):
        e = self.expr
        for _ in range(order):
            e = ex.partial(e, self.var)
        return e

    def of(self, arg):
        """The expression ``f(arg)`` for an expression ``arg``."""
        return ex.substitute(self.expr, {self.var: arg})

    def verify(self):
        checks = {}
        for prop in self.properties:
            kind = prop[0]
            ok, worst = self._check(prop)
            checks[f"{kind}{list(prop[1:])}"] = worst
            if not ok:
                raise PreconditionError(f"cutoff {self.name!r} fails property {prop} (worst value {worst:.3e})")
        self.report = checks
        return checks

    def _open(self, lo, hi):
        return np.linspace(lo, hi, self.samples)[1:-1]

    def _check(self, prop):
        kind = prop[0]
        if kind == "equals":
            _, lo, hi, value = prop
            err = float(np.max(np.abs(self(np.linspace(lo, hi, self.samples)) - value)))
            return err <= self.tol, err
        if kind in ("positive", "negative", "nonneg", "nonpos"):
            _, lo, hi = prop
            vals = self(self._open(lo, hi))
            if kind == "positive":
                return bool(np.all(vals > 0)), float(vals.min())
            if kind == "negative":
                return bool(np.all(vals < 0)), float(vals.max())
            if kind == "nonneg":
                return bool(np.all(vals >= -self.tol)), float(vals.min())
            return bool(np.all(vals <= self.tol)), float(vals.max())
        if kind in ("increasing", "decreasing"):
            _, lo, hi = prop
            d = ex.evaluate_array(self.derivative(), (self.var,), (self._open(lo, hi),))
            if kind == "increasing":
                return bool(np.all(d > 0)), float(d.min())
            return bool(np.all(d < 0)), float(d.max())
        if kind == "bounded":
            _, lo, hi, bound = prop
            m = float(np.max(np.abs(self(np.linspace(lo, hi, self.samples)))))
            return m <= bound, m
        if kind == "flat":
            _, point, order = prop
            worst = 0.0
            e = self.expr
            for _ in range(order + 1):
                worst = max(worst, abs(float(ex.evaluate_array(e, (self.var,), (np.array([point]),))[0])))
                e = ex.partial(e, self.var)
            return worst <= self.tol, worst
        if kind == "value":
            _, point, value = prop
            got = float(self(np.array([point]))[0])
            return abs(got - value) <= self.tol, abs(got - value)
        raise InputError(f"unknown cutoff property {kind!r}")


def plateau_cutoff(eps=0.25, name="g"):
    """``g(w) = 1`` on ``[0, 1-eps]``, decreasing on ``(1-eps, 1)``, ``0`` for ``w >= 1``."""
    if not 0 < eps < 1:
        raise InputError("plateau width parameter must lie in (0, 1)")
    w = ex.Var("w")
    g = 1 - smoothstep((w - (1 - eps)) / ex.const(eps))
    return CutoffSpec(
        name, g, "w", (0.0, 2.0),
        (("equals", 0.0, 1 - eps, 1.0), ("decreasing", 1 - eps, 1.0), ("equals", 1.0, 2.0, 0.0), ("flat", 1.0, 2)),
    )


def radial_bump(text="(1-u)^2", name="h"):
    """A decreasing ``h`` on ``[0, 1]`` with ``h(0) = 1``, ``h(1) = 0``, extended by 0 past 1."""
    chart = ex.make_chart("cutoff", ["u"], [(0.0, 1.0)])
    base = ex.parse_expr(text, chart) if isinstance(text, str) else text
    u = ex.Var("u")
    h = ex.mul(base, ex.step(1 - u))
    return CutoffSpec(
        name, h, "u", (0.0, 1.0),
        (("value", 0.0, 1.0), ("value", 1.0, 0.0), ("decreasing", 0.0, 1.0)),
    )


def shear_g(power=4, name="g"):
    """``g(y) = (1 - y^2)^power``: nonnegative, vanishing to order ``power-1`` at ``y = +-1``."""
    y = ex.Var("y")
    g = (1 - y**2) ** power
    return CutoffSpec(
        name, g, "y", (-1.0, 1.0),
        (("nonneg", -1.0, 1.0), ("positive", -1.0, 1.0), ("flat", 1.0, power - 1), ("flat", -1.0, power - 1)),
    )


def shear_h(scale=4, name="h"):
    """``h(z) = -scale * z (1/2 - z)`` on ``[0, 1/2]``, extended by 0 outside."""
    z = ex.Var("z")
    h = ex.neg(ex.const(scale) * ex.pos(z) * ex.pos(ex.const(0.5) - z))
    return CutoffSpec(
        name, h, "z", (-0.5, 1.0),
        (("value", 0.0, 0.0), ("value", 0.5, 0.0), ("negative", 0.0, 0.5), ("equals", -0.5, 0.0, 0.0),
         ("equals", 0.5, 1.0, 0.0)),
    )


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------


@dataclass
class PerturbResult:
    plane_field: PlaneFieldChart
    before: object
    after: object
    parameter: str
    value: float
    attempts: int
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "form": self.plane_field.form.to_text(),
            "parameter": self.parameter,
            "value": self.value,
            "attempts": self.attempts,
            "before": self.before.to_dict() if self.before is not None else None,
            "after": self.after.to_dict() if self.after is not None else None,
            **self.extra,
        }


# ---------------------------------------------------------------------------
# Tangent arcs
# ---------------------------------------------------------------------------


def arc_chart(name="N"):
    """``N = [-1,1] x [0,1] x [-1,1]`` around a tangent arc along the y-axis."""
    return ex.make_chart(name, ("x", "y", "z"), [(-1.0, 1.0), (0.0, 1.0), (-1.0, 1.0)])


def build_f(m=1.0, delta=0.25, bound=0.1):
    """Positive ``f(y)`` rising on ``[0, 1-delta]`` and falling gently (slope > -m) on ``[1-delta, 1]``.

    Rise: ``bound/4 + (bound/2) (1 - (1-u)^3)`` with ``u = clamp(y/(1-delta))``.
    Fall: ``-s pos(y-(1-delta))^3 / delta^2`` with ``3s < m`` and ``s delta <= bound/8``.
    """
    if m <= 0 or bound <= 0 or not 0 < delta < 1:
        raise InputError("build_f needs m > 0, bound > 0 and delta in (0, 1)")
    y = ex.Var("y")
    b = ex.const(bound)
    u = clamp01(y / ex.const(1 - delta))
    rise = b / 4 + (b / 2) * (1 - (1 - u) ** 3)
    s = min(m / 6.0, bound / (8.0 * delta))
    fall = ex.const(s) * ex.pos(y - ex.const(1 - delta)) ** 3 / ex.const(delta**2)
    f = rise - fall
    return f


def check_f(f, m, delta, bound, samples=2001):
    """The four properties of ``build_f``; returns the worst value of each."""
    ys = np.linspace(0.0, 1.0, samples)
    v = ex.evaluate_array(f, ("y",), (ys,))
    d = ex.evaluate_array(ex.partial(f, "y"), ("y",), (ys,))
    up = (ys > 0) & (ys < 1 - delta)
    down = ys > 1 - delta
    out = {
        "positive": float(v.min()),
        "sup": float(v.max()),
        "rising_min_slope": float(d[up].min()),
        "falling_slope_range": [float(d[down].min()), float(d[down].max())],
    }
    out["ok"] = bool(v.min() > 0 and v.max() <= bound and d[up].min() > 0
                     and d[down].min() > -m and d[down].max() <= 0)
    return out


def tangent_arc_form(a, t, cut, f, chart):
    """``a + t g(x^2) g(z^2) f(y)``."""
    x, z = chart.var("x"), chart.var("z")
    bump = ex.mul(cut.of(x**2), cut.of(z**2))
    return ex.add(a, ex.mul(ex.const(t), ex.mul(bump, f)))


def tangent_arc_contactize(a, t=0.05, cut=None, f=None, chart=None, grid=21, margin=MARGIN,
                           near=0.25, attempts=T_ATTEMPTS):
    """Make ``ker(dz - a dx)`` contact on the interior of ``N`` near a tangent arc.

    Requires a positive confoliation on ``N`` that is contact for ``y`` in
    ``[1-near, 1]``. ``t`` is halved until the interior verdict is
    positive-contact; ``t = 0`` returns the input unchanged.
    """
    chart = chart or arc_chart()
    if isinstance(a, str):
        a = ex.parse_expr(a, chart)
    ex.check_chart(a, chart)
    cut = cut or plateau_cutoff()
    f = f if f is not None else build_f()
    before = classify(normal_form(a, chart), grid, margin=margin)
    if before.verdict not in ("positive-confoliation", "positive-contact"):
        raise PreconditionError(f"input must be a positive confoliation on N, got {before.verdict}")
    da = ex.eval_grid(ex.partial(a, "y"), chart.grid(grid, domain={"y": (1 - near, 1.0)}))
    if np.min(da) < margin:
        raise PreconditionError(f"da/dy must be >= {margin} near y = 1 (min {float(np.min(da)):.3e})")
    if t == 0:
        pf = normal_form(a, chart)
        return PerturbResult(pf, before, before, "t", 0.0, 0)
    tt = float(t)
    last = None
    for k in range(1, attempts + 1):
        at = tangent_arc_form(a, tt, cut, f, chart)
        pf = normal_form(at, chart, label=f"tangent-arc(t={tt})")
        after = classify(pf, grid, margin=margin, interior=True)
        if after.verdict == "positive-contact":
            pf.params.update({"t": tt})
            return PerturbResult(pf, before, after, "t", tt, k)
        last = after
        tt /= 2
    raise VerificationError(f"no t in the halving scan gave interior contact (last verdict {last.verdict})")


# ---------------------------------------------------------------------------
# Holonomy operator
# ---------------------------------------------------------------------------


def holonomy_chart(name="U", half=1.5):
    """``x`` periodic along the loop, ``(y, z)`` in a square around it."""
    return ex.make_chart(name, ("x", "y", "z"), [(0.0, 1.0), (-half, half), (-half, half)],
                         periodic=(True, False, False))


def mixed_density(a, h, chart):
    """``-a_z h + 2 z a h'`` evaluated through ``u = y^2 + z^2``."""
    y, z = chart.var("y"), chart.var("z")
    u = y**2 + z**2
    hu = h.of(u)
    dh = ex.substitute(h.derivative(), {h.var: u})
    return ex.sub(ex.mul(ex.neg(ex.partial(a, "z")), hu), ex.neg(ex.mul(ex.mul(2 * z, a), dh)))


def holonomy_contactize(a, h=None, eps=0.1, chart=None, grid=41, margin=MARGIN, radius2=0.95):
    """``ker(alpha + eps beta)`` with ``alpha = dz - a dx`` and ``beta = h(y^2+z^2) dy``.

    ``a(x, z)`` is the holonomy normal form: ``a(x, 0) = 0`` and
    ``-a_z >= margin``. The result is positive contact on ``{y^2 + z^2 < radius2}``
    and equals ``alpha`` where ``y^2 + z^2 >= 1``.
    """
    chart = chart or holonomy_chart()
    if isinstance(a, str):
        a = ex.parse_expr(a, chart)
    ex.check_chart(a, chart)
    if "y" in ex.free_vars(a):
        raise InputError("holonomy normal form a must not depend on y")
    h = h or radial_bump()
    alpha = normal_form(a, chart)
    g = chart.grid(grid)
    x, y, z = g.points()
    a0 = ex.evaluate_array(a, chart.variables, (x, np.zeros_like(x), np.zeros_like(x)))
    if np.max(np.abs(a0)) > 1e-12:
        raise PreconditionError("a(x, 0) must vanish: the loop {y = z = 0} has to be a leaf")
    az = -np.broadcast_to(ex.eval_grid(ex.partial(a, "z"), g), (g.size,))
    if az.min() < margin:
        raise PreconditionError(f"-da/dz must be >= {margin} (min {az.min():.3e})")
    region = lambda x, y, z: y**2 + z**2 < radius2  # noqa: E731
    mixed = mixed_density(a, h, chart)
    mv = np.broadcast_to(ex.eval_grid(mixed, g), (g.size,))[region(x, y, z)]
    if mv.min() < margin:
        raise PreconditionError(f"mixed density not positive on the disk (min {mv.min():.3e})")
    before = classify(alpha, g, margin=margin)
    if eps == 0:
        return PerturbResult(alpha, before, before, "eps", 0.0, 0, {"mixed_min": float(mv.min())})
    beta = KForm.basis(chart, "y").scale(h.of(chart.var("y") ** 2 + chart.var("z") ** 2))
    pf = PlaneFieldChart(alpha.form + beta.scale(eps), f"holonomy(eps={eps})", {"eps": eps})
    after = classify(pf, g, margin=margin, region=region)
    if after.verdict != "positive-contact":
        raise VerificationError(f"perturbed form is {after.verdict} on the disk, not positive-contact")
    return PerturbResult(pf, before, after, "eps", float(eps), 1, {"mixed_min": float(mv.min()), "radius2": radius2})


# ---------------------------------------------------------------------------
# Shear foliations
# ---------------------------------------------------------------------------


def shear_chart(name="shear", z_range=(-0.25, 0.75)):
    return ex.make_chart(name, ("x", "y", "z"), [(0.0, 1.0), (-1.0, 1.0), z_range], periodic=(True, True, False))


def shear_foliation(g=None, h=None, chart=None, grid=21):
    """``ker(dz + g(y) h(z) dy)``: integrable, with one-sided holonomy along ``{z = 0}`` and ``{z = 1/2}``."""
    g = g or shear_g()
    h = h or shear_h()
    chart = chart or shear_chart()
    coef = ex.mul(g.of(chart.var("y")), h.of(chart.var("z")))
    form = KForm.basis(chart, "z") + KForm.basis(chart, "y").scale(coef)
    pf = PlaneFieldChart(form, "shear")
    report = classify(pf, grid)
    if report.verdict != "foliation":
        raise VerificationError(f"shear plane field classified as {report.verdict}")
    pf.params.update({"g": ex.to_text(g.expr), "h": ex.to_text(h.expr)})
    return pf


def shear_annulus(pf, z0=0.0, eps=0.1, x0=0.0):
    """Annulus ``(s, p) -> (x0, p, z0 + s)`` around the y-loop at height ``z0``."""
    from .forms import ChartMap
    from .surfdyn import TransverseAnnulus

    lo, hi = pf.chart.domain[pf.chart.index("y")]
    src = ex.make_chart("annulus", ("s", "p"), [(-eps, eps), (lo, hi)], periodic=(False, True))
    s, p = src.var("s"), src.var("p")
    return TransverseAnnulus(ChartMap(src, pf.chart, (ex.const(x0), p, ex.const(z0) + s)), lo)


# ---------------------------------------------------------------------------
# Monotone diffeomorphisms
# ---------------------------------------------------------------------------


@dataclass
class SampledDiffeo:
    z: np.ndarray
    fz: np.ndarray
    dfz: np.ndarray
    c: float
    expr: ex.Expr
    support: tuple
    attempts: int
    min_gap: float
    mode: str

    def __call__(self, z):
        return ex.evaluate_array(self.expr, ("z",), (np.asarray(z, dtype=float),))

    def derivative(self, z):
        return ex.evaluate_array(ex.partial(self.expr, "z"), ("z",), (np.asarray(z, dtype=float),))

    def to_dict(self):
        return {"c": self.c, "f": ex.to_text(self.expr), "support": list(self.support), "attempts": self.attempts,
                "min_gap": self.min_gap, "mode": self.mode, "samples": len(self.z)}


def _family_callables(v, zs):
    out = []
    for item in v:
        if isinstance(item, str):
            e = ex.parse_expr(item, ex.make_chart("v", ["z"], [(-1.0, 1.0)]))
            out.append(lambda q, e=e: ex.evaluate_array(e, ("z",), (q,)))
        elif isinstance(item, ex.Expr):
            out.append(lambda q, e=item: ex.evaluate_array(e, ("z",), (q,)))
        elif callable(item):
            out.append(lambda q, fn=item: np.asarray(fn(q), dtype=float))
        else:
            arr = np.asarray(item, dtype=float)
            if arr.shape != zs.shape:
                raise InputError("sampled v_x must be given on the same z grid")
            out.append(CubicSpline(zs, arr))
    return out


def monotone_graph_diffeo(v, eps=None, c0=0.5, samples=401, attempts=C_ATTEMPTS, z=None):
    """Increasing ``f = z - c sigma(z)`` with ``f'(z) v_x(z) > v_x(f(z))`` at every sample.

    ``eps=None`` uses ``sigma = (1 - z^2)^2`` on ``[-1, 1]`` (all ``v_x``
    increasing); otherwise ``sigma = pos(1 - (z/eps)^2)^2`` so ``f`` is the
    identity outside ``(-eps, eps)`` and the inequality is required inside.
    ``v`` is a list of expressions in ``z``, callables or samples on ``z``.
    """
    zs = np.linspace(-1.0, 1.0, samples) if z is None else np.asarray(z, dtype=float)
    fam = _family_callables(v, zs)
    if not fam:
        raise InputError("empty v family")
    for fn in fam:
        if abs(float(np.asarray(fn(np.array([0.0])))[0])) > 1e-12:
            raise PreconditionError("every v_x must vanish at 0")
    zv = ex.Var("z")
    if eps is None:
        sigma = (1 - zv**2) ** 2
        support, mode = (-1.0, 1.0), "monotone"
        if any(np.any(np.diff(fn(zs)) <= 0) for fn in fam):
            raise PreconditionError("v_x must be strictly increasing for the monotone construction")
    else:
        if not 0 < eps < 1:
            raise InputError("eps must lie in (0, 1)")
        sigma = ex.pos(1 - (zv / ex.const(eps)) ** 2) ** 2
        support, mode = (-eps, eps), "sometimes"
    inside = (zs > support[0]) & (zs < support[1])
    zi = zs[inside]
    c = float(c0)
    worst = None
    for k in range(1, attempts + 1):
        f = zv - ex.const(c) * sigma
        fz = ex.evaluate_array(f, ("z",), (zs,))
        dfz = ex.evaluate_array(ex.partial(f, "z"), ("z",), (zs,))
        gaps = [dfz[inside] * fn(zi) - fn(fz[inside]) for fn in fam]
        worst = float(min(gp.min() for gp in gaps))
        if c > 0 and worst > 0 and np.all(dfz > 0):
            return SampledDiffeo(zs, fz, dfz, c, f, support, k, worst, mode)
        c /= 2
    raise VerificationError(f"no c in the halving scan satisfies f'(z) v(z) > v(f(z)) (worst gap {worst:.3e})")


def pulled_back_slope(a0, diffeo, chart):
    """``a0(x, f(z)) / f'(z)``: the graph slope of ``F^{-1}(leaves)`` for ``F(x, z) = (x, f(z))``."""
    z = chart.var("z")
    fz = ex.substitute(diffeo.expr, {"z": z}) if chart is not None else diffeo.expr
    return ex.div(ex.substitute(a0, {"z": fz}), ex.partial(fz, "z"))


# ---------------------------------------------------------------------------
# Interpolation
# ---------------------------------------------------------------------------


def interp_chart(name="U"):
    return ex.make_chart(name, ("x", "y", "z"), [(0.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)], periodic=(True, False, False))


def interpolate_plane_fields(a0, a1, chart=None, grid=21, margin=MARGIN):
    """``a0`` for ``y <= -1/2``, ``a1`` for ``y >= 1/2``, strictly increasing in ``y`` between.

    ``a~ = a0 + (a1 - a0) S(y + 1/2)`` with ``S`` the quintic smoothstep, so
    ``da~/dy = (a1 - a0) S' > 0`` on the transition region and the result is
    positive contact there. Requires ``a1 - a0 >= margin`` at interior
    samples and ``a1 >= a0`` on the boundary of ``U``, where the two slopes
    may agree.
    """
    chart = chart or interp_chart()
    a0 = ex.parse_expr(a0, chart) if isinstance(a0, str) else a0
    a1 = ex.parse_expr(a1, chart) if isinstance(a1, str) else a1
    for e in (a0, a1):
        ex.check_chart(e, chart)
        if "y" in ex.free_vars(e):
            raise InputError("interpolation endpoints must be functions of (x, z)")
    diff = ex.sub(a1, a0)
    full = chart.grid(grid)
    edge = np.broadcast_to(ex.eval_grid(diff, full), (full.size,))
    if edge.min() < -ZERO_TOL:
        k = int(np.argmin(edge))
        where = {v: float(p[k]) for v, p in zip(chart.variables, full.points())}
        raise PreconditionError(f"a1 - a0 must be >= 0 everywhere; it is {edge[k]:.3e} at {where}")
    g = chart.grid(grid, interior=True)
    gap = np.broadcast_to(ex.eval_grid(diff, g), (g.size,))
    if gap.min() < margin:
        k = int(np.argmin(gap))
        where = {v: float(p[k]) for v, p in zip(chart.variables, g.points())}
        raise PreconditionError(f"a1 - a0 must be >= {margin} inside U; it is {gap[k]:.3e} at {where}")
    y = chart.var("y")
    at = ex.add(a0, ex.mul(ex.sub(a1, a0), smoothstep(y + ex.const(0.5))))
    pf = normal_form(at, chart, label="interpolated")
    region = lambda x, y, z: np.abs(y) < 0.5  # noqa: E731
    after = classify(pf, chart.grid(grid, interior=True), margin=margin, region=region)
    if after.verdict != "positive-contact":
        raise VerificationError(f"transition region classified as {after.verdict}")
    return PerturbResult(pf, None, after, "gap_min", float(gap.min()), 1)


__all__ = [
    "clamp01",
    "smoothstep",
    "CutoffSpec",
    "plateau_cutoff",
    "radial_bump",
    "shear_g",
    "shear_h",
    "PerturbResult",
    "arc_chart",
    "build_f",
    "check_f",
    "tangent_arc_form",
    "tangent_arc_contactize",
    "holonomy_chart",
    "mixed_density",
    "holonomy_contactize",
    "shear_chart",
    "shear_foliation",
    "shear_annulus",
    "SampledDiffeo",
    "monotone_graph_diffeo",
    "pulled_back_slope",
    "interp_chart",
    "interpolate_plane_fields",
]
