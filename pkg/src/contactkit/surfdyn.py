"""Characteristic foliations on surfaces and holonomy return maps on transverse annuli.

On a parameter chart ``(u, v)`` the pulled-back 1-form is ``A du + B dv``; its
kernel is spanned by ``(B, -A)``, which vanishes exactly at the singular
points. Streamlines follow that direction field with fixed-step RK4, choosing
the sign of the kernel vector continuously along each curve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .errors import InputError, PreconditionError
from .forms import ChartMap, SurfacePatch, pullback

SINGULAR_TOL = 1e-7
STEP = 1e-3
MAX_STEPS = 10**6
HOLONOMY_TOL = 1e-9
DERIVATIVE_MARGIN = 1e-4


@dataclass
class SingularPoint:
    u: float
    v: float
    residual: float
    point: tuple = ()
    multiplicity: int = 1

    def to_dict(self):
        return {"u": self.u, "v": self.v, "residual": self.residual, "point": list(self.point),
                "multiplicity": self.multiplicity}


@dataclass
class Streamline:
    samples: np.ndarray  # (N, 3) columns s, u, v
    reason: str
    tangents: np.ndarray = field(default=None, repr=False)

    @property
    def length(self):
        return float(self.samples[-1, 0]) if len(self.samples) else 0.0

    def __len__(self):
        return len(self.samples)


@dataclass
class CharacteristicFoliation:
    singular: list
    streamlines: list
    patch: SurfacePatch
    grid: ex.Grid
    mask: np.ndarray  # singular flags on the parameter grid, in grid shape
    line_field: tuple  # (A, B) pulled-back coefficients
    tol: float

    def __iter__(self):
        return iter((self.singular, self.streamlines))

    def singular_rows(self, axis=0):
        """Indices along ``axis`` whose whole grid line is singular."""
        other = tuple(k for k in range(self.mask.ndim) if k != axis)
        return [int(i) for i in np.flatnonzero(self.mask.all(axis=other))]

    def rows_with_singularities(self, axis=0):
        other = tuple(k for k in range(self.mask.ndim) if k != axis)
        return [int(i) for i in np.flatnonzero(self.mask.any(axis=other))]


def induced_line_field(pf, patch):
    """Coefficients ``(A, B)`` of the pullback of the plane field's form to the surface."""
    beta = pullback(patch, pf.form)
    chart = patch.source
    return beta.coefficient(chart.variables[0]), beta.coefficient(chart.variables[1])


def _field_fn(A, B, variables, orientation):
    fa = ex.compile_expr(A, variables)
    fb = ex.compile_expr(B, variables)

    def direction(u, v):
        with np.errstate(all="ignore"):
            a = np.broadcast_to(fa(u, v), np.shape(u))
            b = np.broadcast_to(fb(u, v), np.shape(u))
        return orientation * b, -orientation * a

    return direction


def _wrap(chart, coords):
    out = []
    for x, (lo, hi), per in zip(coords, chart.domain, chart.periodic):
        out.append(lo + np.mod(x - lo, hi - lo) if per else x)
    return out


def _inside(chart, coords):
    ok = np.ones(np.shape(coords[0]), dtype=bool)
    for x, (lo, hi), per in zip(coords, chart.domain, chart.periodic):
        if not per:
            ok &= (x >= lo) & (x <= hi)
    return ok


def _periodic_delta(chart, a, b):
    d = []
    for x, y, (lo, hi), per in zip(a, b, chart.domain, chart.periodic):
        w = hi - lo
        dx = x - y
        if per:
            dx = (dx + 0.5 * w) % w - 0.5 * w
        d.append(dx)
    return np.hypot(*d)


def _seeds_from_count(chart, n):
    """``n`` seeds spread over the interior of the parameter domain."""
    (u0, u1), (v0, v1) = chart.domain
    k = max(1, int(np.ceil(np.sqrt(n))))
    us = np.linspace(u0, u1, k + 2)[1:-1]
    vs = np.linspace(v0, v1, k, endpoint=False) if chart.periodic[1] else np.linspace(v0, v1, k + 2)[1:-1]
    pts = [(u, v) for u in us for v in vs][:n]
    return pts


def integrate_streamlines(direction, chart, seeds, step=STEP, max_steps=MAX_STEPS, tol=SINGULAR_TOL,
                          record_every=1, close_factor=2.0):
    """RK4 integration of the unit direction field from every seed at once."""
    seeds = np.asarray(seeds, dtype=float).reshape(-1, 2)
    n = len(seeds)
    u, v = seeds[:, 0].copy(), seeds[:, 1].copy()
    du, dv = direction(u, v)
    norm = np.hypot(du, dv)
    prev = np.stack([du, dv], axis=1) / np.where(norm > 0, norm, 1.0)[:, None]
    active = np.ones(n, dtype=bool)
    reason = np.array(["step-limit"] * n, dtype=object)
    reason[norm < tol] = "singularity"
    active &= norm >= tol
    s = np.zeros(n)
    hist = [[(0.0, u[i], v[i])] for i in range(n)]
    tang = [[tuple(prev[i])] for i in range(n)]
    min_closing = 20 * step

    def unit(uu, vv, ref):
        a, b = direction(uu, vv)
        nn = np.hypot(a, b)
        vec = np.stack([a, b], axis=1) / np.where(nn > 0, nn, 1.0)[:, None]
        flip = np.sum(vec * ref, axis=1) < 0
        vec[flip] *= -1
        return vec, nn

    for it in range(1, max_steps + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        ref = prev[idx]
        uu, vv = u[idx], v[idx]
        k1, n1 = unit(uu, vv, ref)
        k2, n2 = unit(uu + 0.5 * step * k1[:, 0], vv + 0.5 * step * k1[:, 1], k1)
        k3, n3 = unit(uu + 0.5 * step * k2[:, 0], vv + 0.5 * step * k2[:, 1], k2)
        k4, n4 = unit(uu + step * k3[:, 0], vv + step * k3[:, 1], k3)
        inc = (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        nu, nv = uu + step * inc[:, 0], vv + step * inc[:, 1]
        nu, nv = _wrap(chart, (nu, nv))
        _, nend = unit(nu, nv, inc)
        sing = np.minimum.reduce([n1, n2, n3, n4, nend]) < tol
        outside = ~_inside(chart, (nu, nv))
        s[idx] += step
        tvec, _ = unit(nu, nv, inc)
        u[idx], v[idx] = nu, nv
        prev[idx] = tvec
        start = seeds[idx]
        closed = (s[idx] > min_closing) & (_periodic_delta(chart, (nu, nv), (start[:, 0], start[:, 1])) < close_factor * step)
        for j, i in enumerate(idx):
            stop = outside[j] or sing[j] or closed[j]
            if stop or it % record_every == 0:
                if not outside[j]:
                    hist[i].append((s[i], nu[j], nv[j]))
                    tang[i].append(tuple(tvec[j]))
        for flag, label in ((outside, "boundary"), (sing, "singularity"), (closed, "closed")):
            hit = idx[flag & active[idx]]
            reason[hit] = label
            active[hit] = False
    return [Streamline(np.array(h), str(r), np.array(t)) for h, r, t in zip(hist, reason, tang)]


def characteristic_foliation(pf, patch, seeds=16, grid=None, step=STEP, max_steps=MAX_STEPS,
                             tol=SINGULAR_TOL, merge=True, record_every=1):
    """Singular points and streamlines of the line field ``xi ∩ TS`` on a surface patch.

    ``grid`` is the parameter grid used to locate singular points (default 81
    per axis, endpoints included). When the target chart has Cartesian
    coordinates, singular grid points with the same image are merged.
    """
    if patch.target != pf.chart:
        raise InputError("surface must map into the plane field's chart")
    src = patch.source
    g = grid if isinstance(grid, ex.Grid) else ex.Grid.build(src, grid or 81, inset=0.0)
    patch.check_immersion(g)
    A, B = induced_line_field(pf, patch)
    pts = g.points()
    a = np.broadcast_to(ex.eval_grid(A, g), (g.size,))
    b = np.broadcast_to(ex.eval_grid(B, g), (g.size,))
    resid = np.maximum(np.abs(a), np.abs(b))
    mask = resid <= tol
    singular = _collect_singular(patch, pts, resid, mask, merge)
    if isinstance(seeds, int):
        seeds = _seeds_from_count(src, seeds)
    direction = _field_fn(A, B, src.variables, patch.orientation)
    lines = integrate_streamlines(direction, src, seeds, step, max_steps, tol, record_every) if len(seeds) else []
    return CharacteristicFoliation(singular, lines, patch, g, mask.reshape(g.shape), (A, B), tol)


def _collect_singular(patch, pts, resid, mask, merge):
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return []
    params = [p[idx] for p in pts]
    image = patch.apply(params)
    cart = patch.target.to_cartesian(*image)
    cart = np.stack([np.broadcast_to(c, idx.shape) for c in cart], axis=1)
    out = []
    if merge:
        keys = np.round(cart, 9) + 0.0
        _, first, counts = np.unique(keys, axis=0, return_index=True, return_counts=True)
        order = np.argsort(first)
        for j in order:
            k = first[j]
            out.append(SingularPoint(float(params[0][k]), float(params[1][k]), float(resid[idx[k]]),
                                     tuple(float(c) for c in cart[k]), int(counts[j])))
    else:
        for k in range(idx.size):
            out.append(SingularPoint(float(params[0][k]), float(params[1][k]), float(resid[idx[k]]),
                                     tuple(float(c) for c in cart[k])))
    return out


def streamline_residuals(fol, line):
    """``|alpha(T)|`` along a streamline for its recorded unit tangents."""
    A, B = fol.line_field
    src = fol.patch.source
    u, v = line.samples[:, 1], line.samples[:, 2]
    a = ex.evaluate_array(A, src.variables, (u, v))
    b = ex.evaluate_array(B, src.variables, (u, v))
    return np.abs(a * line.tangents[:, 0] + b * line.tangents[:, 1])


# ---------------------------------------------------------------------------
# Holonomy
# ---------------------------------------------------------------------------


@dataclass
class TransverseAnnulus:
    """An embedded annulus ``(s, p)``, ``|s| < eps``, ``p`` periodic, with ``{s=0}`` the loop.

    The transversal is ``{p = p0}``. The first source variable is ``s`` and
    the second is the periodic loop parameter.
    """

    embedding: ChartMap
    p0: float = None

    def __post_init__(self):
        src = self.embedding.source
        if src.dim != 2:
            raise InputError("annulus needs a 2-dimensional parameter chart (s, p)")
        if not src.periodic[1] or src.periodic[0]:
            raise InputError("annulus chart must be (s, p) with only p periodic")
        if self.p0 is None:
            self.p0 = src.domain[1][0]

    @property
    def chart(self):
        return self.embedding.source

    @property
    def s_range(self):
        return self.chart.domain[0]

    @property
    def period(self):
        lo, hi = self.chart.domain[1]
        return hi - lo

    @classmethod
    def parse(cls, text, target, s_range, p_range, p0=None):
        from .forms import parse_surface

        patch = parse_surface(text, target, [s_range, p_range], periodic=(False, True), name="annulus")
        return cls(ChartMap(patch.source, patch.target, patch.components), p0)


@dataclass
class ReturnMap:
    x: np.ndarray
    y: np.ndarray
    direction: int
    loops: int
    phi0: float
    fixed_points: list
    derivative: float
    dropped: int
    tol: float
    one_sided: str = ""
    _flow: object = field(default=None, repr=False)

    def __call__(self, x):
        """Evaluate the return map at new points by integrating their leaves."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self._flow is not None:
            return self._flow(x)
        return np.interp(x, self.x, self.y)

    def table(self):
        return [(float(a), float(b)) for a, b in zip(self.x, self.y)]

    def to_dict(self):
        return {
            "direction": self.direction,
            "loops": self.loops,
            "phi0": self.phi0,
            "fixed_points": self.fixed_points,
            "derivative": self.derivative,
            "samples": len(self.x),
            "dropped": self.dropped,
            "tol": self.tol,
            "one_sided": self.one_sided,
        }


def _leaf_rhs(pf, annulus):
    beta = pullback(annulus.embedding, pf.form)
    s_name, p_name = annulus.chart.variables
    P, Q = beta.coefficient(s_name), beta.coefficient(p_name)
    fp = ex.compile_expr(P, annulus.chart.variables)
    fq = ex.compile_expr(Q, annulus.chart.variables)
    return P, Q, fp, fq


def check_annulus(pf, annulus, n=41, tol=SINGULAR_TOL):
    """Transversality checks: the form restricts nontrivially and ``ds``-part never vanishes."""
    P, Q, fp, fq = _leaf_rhs(pf, annulus)
    g = annulus.chart.grid(n, inset=0.0)
    pv = np.broadcast_to(ex.eval_grid(P, g), (g.size,))
    if np.min(np.abs(pv)) <= tol:
        k = int(np.argmin(np.abs(pv)))
        where = [float(c[k]) for c in g.points()]
        raise PreconditionError(f"induced foliation is tangent to the transversal direction at (s, p) = {where}")
    return float(np.min(np.abs(pv)))


def _flow_map(fp, fq, annulus, direction, loops, step):
    lo, hi = annulus.s_range
    plo, phi = annulus.chart.domain[1]
    total = annulus.period * loops
    nsteps = max(1, int(np.ceil(total / step)))
    h = direction * total / nsteps

    def rhs(s, p):
        p = plo + (p - plo) % (phi - plo)
        with np.errstate(all="ignore"):
            return -np.broadcast_to(fq(s, p), s.shape) / np.broadcast_to(fp(s, p), s.shape)

    def flow(x):
        s = np.array(x, dtype=float)
        alive = (s >= lo) & (s <= hi)
        p = annulus.p0
        for _ in range(nsteps):
            k1 = rhs(s, p)
            k2 = rhs(s + 0.5 * h * k1, p + 0.5 * h)
            k3 = rhs(s + 0.5 * h * k2, p + 0.5 * h)
            k4 = rhs(s + h * k3, p + h)
            s = s + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
            p = p + h
            alive &= (s >= lo) & (s <= hi) & np.isfinite(s)
        return np.where(alive, s, np.nan)

    return flow


def holonomy_return_map(pf, annulus, direction=1, seeds=41, loops=1, step=STEP, tol=HOLONOMY_TOL,
                        check=True, classify_grid=15, one_sided=""):
    """Sampled holonomy ``phi`` along the loop ``{s=0}`` of the annulus.

    Seeds are points of the transversal (an int gives that many evenly spaced
    seeds across 90% of the ``s`` range). Leaves that leave the annulus before
    closing up are dropped. ``one_sided`` may be ``"+"`` or ``"-"`` to keep
    only seeds on that side of 0.
    """
    if direction not in (1, -1):
        raise InputError("direction must be +1 or -1")
    if check:
        from .planefields import classify

        verdict = classify(pf, classify_grid).verdict
        if verdict != "foliation":
            raise PreconditionError(f"holonomy needs a foliation, got {verdict}")
    check_annulus(pf, annulus)
    P, Q, fp, fq = _leaf_rhs(pf, annulus)
    lo, hi = annulus.s_range
    if isinstance(seeds, int):
        w = 0.9 * min(-lo, hi) if lo < 0 < hi else 0.9 * (hi - lo) / 2
        xs = np.linspace(-w, w, seeds) if lo < 0 < hi else np.linspace(lo, hi, seeds + 2)[1:-1]
    else:
        xs = np.asarray(seeds, dtype=float)
    if one_sided == "+":
        xs = xs[xs > 0]
    elif one_sided == "-":
        xs = xs[xs < 0]
    elif one_sided:
        raise InputError("one_sided must be '', '+' or '-'")
    flow = _flow_map(fp, fq, annulus, direction, loops, step)
    ys = flow(xs)
    ok = np.isfinite(ys)
    if not ok.any():
        raise PreconditionError("no seed completes a full loop inside the annulus")
    xs, ys = xs[ok], ys[ok]
    phi0 = float(flow(np.array([0.0]))[0]) if lo <= 0 <= hi else float("nan")
    fixed = _fixed_points(xs, ys, tol)
    enough = np.count_nonzero(np.unique(xs)) >= 3
    deriv = fixed_point_derivative(xs, ys, 0.0) if lo <= 0 <= hi and enough else float("nan")
    return ReturnMap(xs, ys, direction, loops, phi0, fixed, deriv, int((~ok).sum()), tol, one_sided, flow)


def _fixed_points(xs, ys, tol):
    d = ys - xs
    out = [float(x) for x, e in zip(xs, d) if abs(e) <= tol]
    for k in range(len(xs) - 1):
        if d[k] * d[k + 1] < 0 and abs(d[k]) > tol and abs(d[k + 1]) > tol:
            out.append(float(xs[k] - d[k] * (xs[k + 1] - xs[k]) / (d[k + 1] - d[k])))
    return sorted(out)


def fixed_point_derivative(xs, ys, x0=0.0, y0=None):
    """Derivative at the fixed point ``x0`` by Neville extrapolation to ``x -> x0``
    of the difference quotients ``(phi(x) - y0) / (x - x0)`` at the three
    nonzero samples nearest ``x0``.
    """
    y0 = x0 if y0 is None else y0
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    xs, first = np.unique(xs, return_index=True)
    ys = ys[first]
    keep = np.abs(xs - x0) > 0
    xs, ys = xs[keep], ys[keep]
    if len(xs) < 3:
        raise InputError("need at least three samples off the fixed point")
    near = np.argsort(np.abs(xs - x0))[:3]
    h = xs[near] - x0
    q = (ys[near] - y0) / h
    # Neville's scheme evaluated at h = 0
    p = list(q)
    for m in range(1, 3):
        for i in range(3 - m):
            p[i] = (h[i] * p[i + 1] - h[i + m] * p[i]) / (h[i] - h[i + m])
    return float(p[0])


@dataclass
class HolonomyClass:
    kind: str
    linear: bool
    derivative: float
    sup_displacement: float
    sides: dict
    side_derivatives: dict
    tol: float
    derivative_margin: float

    @property
    def labels(self):
        out = [self.kind]
        if self.linear and self.kind != "linear":
            out.insert(0, "linear")
        return out

    def to_dict(self):
        return {
            "kind": self.kind,
            "linear": self.linear,
            "labels": self.labels,
            "derivative": self.derivative,
            "sup_displacement": self.sup_displacement,
            "sides": self.sides,
            "side_derivatives": self.side_derivatives,
            "tol": self.tol,
            "derivative_margin": self.derivative_margin,
        }


def _side_kind(x, y, tol):
    if x.size == 0:
        return "empty"
    ax, ay = np.abs(x), np.abs(y)
    if np.all(np.abs(y - x) <= tol):
        return "trivial"
    if np.all(ay < ax - tol):
        return "attracting"
    if np.all(ay > ax + tol):
        return "repelling"
    if np.any(ay < ax - tol):
        return "sometimes-attracting"
    if np.any(ay > ax + tol):
        return "sometimes-repelling"
    return "other"


def classify_holonomy(rm, tol=None, derivative_margin=DERIVATIVE_MARGIN, min_samples=10):
    """Trivial / linear / attracting / repelling / sometimes-* / other.

    ``kind`` describes the dynamics (``|phi(x)|`` against ``|x|``); ``linear``
    flags ``|phi'(0) - 1| > derivative_margin`` for the two-sided estimate or
    for either one-sided estimate. A one-sided map is classified on its side
    only.
    """
    tol = rm.tol if tol is None else tol
    x, y = np.asarray(rm.x), np.asarray(rm.y)
    pos, neg = x > 0, x < 0
    if rm.one_sided:
        side = pos if rm.one_sided == "+" else neg
        if side.sum() < min_samples:
            raise InputError(f"need at least {min_samples} samples on the {rm.one_sided} side")
    elif pos.sum() < min_samples or neg.sum() < min_samples:
        raise InputError(f"need at least {min_samples} samples on each side of 0")
    sup = float(np.max(np.abs(y - x)))
    sides = {"+": _side_kind(x[pos], y[pos], tol), "-": _side_kind(x[neg], y[neg], tol)}
    y0 = rm.phi0 if np.isfinite(rm.phi0) else 0.0
    side_d = {}
    for key, sel in (("+", pos), ("-", neg)):
        if sel.sum() >= 3:
            side_d[key] = fixed_point_derivative(x[sel], y[sel], 0.0, y0)
    deriv = side_d[rm.one_sided] if rm.one_sided else rm.derivative
    considered_d = [deriv] + ([] if rm.one_sided else list(side_d.values()))
    linear = bool(any(abs(d - 1.0) > derivative_margin for d in considered_d))
    if sup <= tol:
        kind = "trivial"
    else:
        considered = [sides[rm.one_sided]] if rm.one_sided else [sides["+"], sides["-"]]
        if all(k == "attracting" for k in considered):
            kind = "attracting"
        elif all(k == "repelling" for k in considered):
            kind = "repelling"
        elif all(k in ("attracting", "sometimes-attracting") for k in considered):
            kind = "sometimes-attracting"
        elif all(k in ("repelling", "sometimes-repelling") for k in considered):
            kind = "sometimes-repelling"
        elif linear:
            kind = "linear"
        else:
            kind = "other"
    return HolonomyClass(kind, linear, float(deriv), sup, sides, side_d, tol, derivative_margin)


def sampled_return_map(x, phi, tol=HOLONOMY_TOL, one_sided=""):
    """Wrap externally sampled pairs ``(x, phi(x))`` as a :class:`ReturnMap`."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(phi(x) if callable(phi) else phi, dtype=float)
    if x.shape != y.shape:
        raise InputError("x and phi(x) must have the same length")
    order = np.argsort(x)
    x, y = x[order], y[order]
    phi0 = float(phi(np.array([0.0]))[0]) if callable(phi) else float(np.interp(0.0, x, y))
    deriv = fixed_point_derivative(x, y, 0.0, phi0) if len(x) >= 3 else float("nan")
    flow = (lambda z: np.asarray(phi(z), dtype=float)) if callable(phi) else None
    return ReturnMap(x, y, 1, 1, phi0, _fixed_points(x, y, tol), deriv, 0, tol, one_sided, flow)


def reeb_annulus(pf, eps=0.3, p0=0.0):
    """Annulus ``(s, p) -> (sqrt(1 - s), 0, p)`` about the torus leaf of the Reeb example.

    In these coordinates the induced form is ``ds + s dp``.
    """
    src = ex.make_chart("annulus", ("s", "p"), [(-eps, eps), (0.0, 1.0)], periodic=(False, True))
    s, p = src.var("s"), src.var("p")
    return TransverseAnnulus(ChartMap(src, pf.chart, (ex.sqrt(1 - s), ex.ZERO, p)), p0)


__all__ = [
    "SINGULAR_TOL",
    "SingularPoint",
    "Streamline",
    "CharacteristicFoliation",
    "induced_line_field",
    "characteristic_foliation",
    "integrate_streamlines",
    "streamline_residuals",
    "TransverseAnnulus",
    "ReturnMap",
    "check_annulus",
    "holonomy_return_map",
    "fixed_point_derivative",
    "HolonomyClass",
    "classify_holonomy",
    "sampled_return_map",
    "reeb_annulus",
]
