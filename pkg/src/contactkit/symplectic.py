"""Four-dimensional checks: filling forms on M x [-1, 1], dilating fields and domination."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .errors import DegreeError, DomainError, InputError, PreconditionError
from .forms import (
    MARGIN,
    ZERO_TOL,
    KForm,
    VectorFieldChart,
    exterior_d,
    extend,
    interior_product,
    parse_form,
    product_chart,
    pullback,
    slice_map,
    wedge,
)
from .planefields import PlaneFieldChart, classify

EPS_HALVINGS = 30


def _grid(chart, grid):
    return grid if isinstance(grid, ex.Grid) else chart.grid(grid)


def _max_norm(form, grid):
    return form.max_norm(grid) if form.coeffs else 0.0


def _where(grid, k):
    return {v: float(p[k]) for v, p in zip(grid.chart.variables, grid.points())}


# ---------------------------------------------------------------------------
# Oriented bases of plane fields
# ---------------------------------------------------------------------------


def oriented_kernel_basis(alpha_values, tol=ZERO_TOL):
    """Orthonormal oriented basis ``(v, w)`` of ``ker(alpha)`` at each point.

    ``alpha_values`` is ``(3, N)``. The coordinate with the largest ``|alpha_i|``
    is eliminated; the other two coordinate directions, projected into the
    kernel, are orthonormalized. The pair is ordered so that ``(n, v, w)`` is
    positively oriented for ``n`` with ``alpha(n) > 0``.
    """
    a = np.asarray(alpha_values, dtype=float)
    if a.shape[0] != 3:
        raise DegreeError("oriented kernel bases are built for 1-forms on 3-charts")
    n = a.shape[1]
    big = np.argmax(np.abs(a), axis=0)
    amax = a[big, np.arange(n)]
    if np.any(np.abs(amax) <= tol):
        k = int(np.flatnonzero(np.abs(amax) <= tol)[0])
        raise DomainError(f"cannot build a kernel basis where the 1-form vanishes (sample {k})")
    others = np.array([[1, 2], [0, 2], [0, 1]])[big]  # (N, 2)
    vecs = []
    for col in range(2):
        j = others[:, col]
        w = np.zeros((3, n))
        w[j, np.arange(n)] = 1.0
        w[big, np.arange(n)] = -a[j, np.arange(n)] / amax
        vecs.append(w)
    v1 = vecs[0] / np.linalg.norm(vecs[0], axis=0)
    w2 = vecs[1] - np.sum(vecs[1] * v1, axis=0) * v1
    v2 = w2 / np.linalg.norm(w2, axis=0)
    normal = a / np.linalg.norm(a, axis=0)  # alpha(normal) = |alpha| > 0
    det = np.einsum("ij,ij->j", normal, np.cross(v1, v2, axis=0))
    flip = det < 0
    v1[:, flip], v2[:, flip] = v2[:, flip].copy(), v1[:, flip].copy()
    return v1, v2


def restrict_to_plane_field(omega, pf, grid):
    """Values ``omega(v, w)`` on the oriented basis of ``xi`` at the grid points."""
    if omega.degree != 2 or omega.chart != pf.chart:
        raise InputError("need a 2-form on the plane field's chart")
    pts = grid.points()
    vals = pf.form.values(pts)
    alpha = np.stack([np.broadcast_to(vals.get((i,), 0.0), (grid.size,)) for i in range(3)])
    v, w = oriented_kernel_basis(alpha)
    return omega.apply([v, w], pts)


@dataclass
class DominationResult:
    ok: bool
    minimum: float
    margin: float
    points: int

    def __bool__(self):
        return self.ok

    def to_dict(self):
        return {"ok": self.ok, "minimum": self.minimum, "margin": self.margin, "points": self.points}


def weak_domination_check(omega, pf, grid=21, t=None, margin=MARGIN, var="t"):
    """``omega|xi > 0``: ``omega(v, w) >= margin`` on oriented bases of ``xi``.

    ``omega`` lives on the plane field's chart, or on a product chart from
    which the slice ``{var = t}`` is taken.
    """
    if omega.chart.dim == 4:
        if t is None:
            raise InputError("a 4-dimensional omega needs the slice value t")
        omega = pullback(slice_map(pf.chart, omega.chart, **{var: t}), omega)
    g = _grid(pf.chart, grid)
    pf.check_nonvanishing(g)
    vals = restrict_to_plane_field(omega, pf, g)
    m = float(np.min(vals))
    return DominationResult(m >= margin, m, margin, g.size)


# ---------------------------------------------------------------------------
# Filling forms
# ---------------------------------------------------------------------------


@dataclass
class FillingCertificate:
    omega: KForm
    d_omega_norm: float
    omega_squared_min: float
    omega_squared_max: float
    boundary_minus: float
    boundary_plus: float
    eps: float
    tol: float
    margin: float
    attempts: int = 1

    @property
    def valid(self):
        return (
            self.d_omega_norm <= self.tol
            and self.omega_squared_min >= self.margin
            and self.boundary_minus >= self.margin
            and self.boundary_plus >= self.margin
        )

    def to_dict(self):
        return {
            "omega": self.omega.to_text(),
            "valid": self.valid,
            "d_omega_norm": self.d_omega_norm,
            "omega_squared_min": self.omega_squared_min,
            "omega_squared_max": self.omega_squared_max,
            "boundary_minus": self.boundary_minus,
            "boundary_plus": self.boundary_plus,
            "eps": self.eps,
            "tol": self.tol,
            "margin": self.margin,
            "attempts": self.attempts,
        }


def check_taut_hypotheses(alpha, v, Omega, grid, margin=MARGIN, tol=ZERO_TOL):
    """Positive volume, ``d(i_v Omega) = 0`` and ``alpha(v) >= margin``; raises on failure."""
    chart = alpha.chart
    if v.chart != chart or Omega.chart != chart:
        raise InputError("alpha, v and Omega must live on the same chart")
    if alpha.degree != 1 or Omega.degree != chart.dim or chart.dim != 3:
        raise DegreeError("need a 1-form alpha and a volume form Omega on a 3-chart")
    vol = Omega.density_values(grid)
    if vol.min() < margin:
        k = int(np.argmin(vol))
        raise PreconditionError(f"Omega is not a positive volume form at {_where(grid, k)}")
    preserved = exterior_d(interior_product(v, Omega))
    resid = _max_norm(preserved, grid)
    if resid > tol * (1 + float(np.max(np.abs(vol)))):
        raise PreconditionError(f"v does not preserve Omega: max |d(i_v Omega)| = {resid:.3e}")
    pairing = np.broadcast_to(alpha.apply([v.values(grid.points())], grid.points()), (grid.size,))
    if pairing.min() < margin:
        k = int(np.argmin(pairing))
        raise PreconditionError(f"v is not transverse to ker(alpha): alpha(v) = {pairing[k]:.3e} at {_where(grid, k)}")
    return {"volume_min": float(vol.min()), "d_iv_Omega": resid, "alpha_v_min": float(pairing.min())}


def filling_form(alpha, v, Omega, eps, var="t", interval=(-1.0, 1.0)):
    """``omega = i_v Omega + eps d(t alpha)`` on ``M x [-1, 1]`` (``t`` first)."""
    X = product_chart(alpha.chart, var, interval, first=True)
    tilde = extend(interior_product(v, Omega), X)
    ta = extend(alpha, X).scale(X.var(var))
    return tilde + exterior_d(ta).scale(eps), X


def certify(omega, alpha, grid3, grid4, eps, margin=MARGIN, tol=ZERO_TOL, var="t", interval=(-1.0, 1.0)):
    dnorm = _max_norm(exterior_d(omega), grid4)
    sq = wedge(omega, omega).density_values(grid4)
    pf = PlaneFieldChart(alpha)
    lo = weak_domination_check(omega, pf, grid3, t=interval[0], margin=margin, var=var).minimum
    hi = weak_domination_check(omega, pf, grid3, t=interval[1], margin=margin, var=var).minimum
    return FillingCertificate(omega, dnorm, float(sq.min()), float(sq.max()), lo, hi, float(eps), tol, margin)


def weak_filling_form(alpha, v, Omega, eps=None, grid=9, grid3=None, margin=MARGIN, tol=ZERO_TOL,
                      halvings=EPS_HALVINGS):
    """Build and certify the filling form; ``eps=None`` scans ``1, 1/2, 1/4, ...``."""
    g3 = _grid(alpha.chart, grid3 or max(grid, 11))
    check_taut_hypotheses(alpha, v, Omega, g3, margin, tol)
    values = [eps] if eps is not None else [0.5**k for k in range(halvings + 1)]
    cert = None
    for k, e in enumerate(values, 1):
        omega, X = filling_form(alpha, v, Omega, e)
        cert = certify(omega, alpha, g3, _grid(X, grid), e, margin, tol)
        cert.attempts = k
        if cert.valid:
            return cert
    return cert


def taut_t3_example():
    """``alpha = dz``, ``v = d/dz``, ``Omega = dx ^ dy ^ dz`` on the 3-torus."""
    from .planefields import torus_chart

    chart = torus_chart()
    return parse_form("dz", chart), VectorFieldChart.coordinate(chart, "z"), KForm.volume(chart)


# ---------------------------------------------------------------------------
# Dilating fields
# ---------------------------------------------------------------------------


@dataclass
class DilatingResult:
    ok: bool
    residual: float
    tol: float

    def __bool__(self):
        return self.ok

    def to_dict(self):
        return {"ok": self.ok, "residual": self.residual, "tol": self.tol}


def check_dilating(v, omega, grid=7, tol=ZERO_TOL):
    """``L_v omega = omega`` via ``d(i_v omega) - omega``, on a grid."""
    if omega.degree != 2:
        raise DegreeError("dilating fields are checked against 2-forms")
    g = _grid(omega.chart, grid)
    closed = _max_norm(exterior_d(omega), g)
    if closed > tol:
        raise PreconditionError(f"omega is not closed (max |d omega| = {closed:.3e})")
    resid = _max_norm(exterior_d(interior_product(v, omega)) - omega, g)
    return DilatingResult(resid <= tol, resid, tol)


def identity_residual(v, omega, points):
    """``max |(i_v omega) ^ omega - 1/2 i_v(omega ^ omega)|`` at the given points."""
    lhs = wedge(interior_product(v, omega), omega)
    rhs = interior_product(v, wedge(omega, omega)).scale(ex.const(0.5))
    diff = lhs - rhs
    coords = tuple(np.asarray(p, dtype=float) for p in points)
    vals = diff.values(coords)
    return max((float(np.max(np.abs(x))) for x in vals.values()), default=0.0)


def random_points(chart, n, rng, inset=1e-3):
    pts = []
    for (lo, hi) in chart.domain:
        w = hi - lo
        pts.append(rng.uniform(lo + inset * w, hi - inset * w, n))
    return pts


@dataclass
class BoundaryForm:
    alpha: KForm
    report: object
    dilating: DilatingResult
    identity_residual: float

    def to_dict(self):
        return {
            "alpha": self.alpha.to_text(),
            "classification": self.report.to_dict(),
            "dilating": self.dilating.to_dict(),
            "identity_residual": self.identity_residual,
        }


def induced_boundary_form(v, omega, boundary, grid=21, grid4=7, tol=ZERO_TOL, samples=100, seed=0):
    """``alpha = i_v omega`` pulled back to a hypersurface, with its contact verdict."""
    dil = check_dilating(v, omega, grid4, tol)
    if not dil.ok:
        raise PreconditionError(f"v is not dilating for omega (residual {dil.residual:.3e})")
    alpha = pullback(boundary, interior_product(v, omega))
    report = classify(PlaneFieldChart(alpha, "boundary"), grid)
    rng = np.random.default_rng(seed)
    resid = identity_residual(v, omega, random_points(omega.chart, samples, rng))
    return BoundaryForm(alpha, report, dil, resid)


def standard_r4(half=1.0):
    """``(x1, y1, x2, y2)`` with ``omega = dx1^dy1 + dx2^dy2`` and the radial field ``v``."""
    chart = ex.make_chart("R4", ("x1", "y1", "x2", "y2"), [(-half, half)] * 4)
    omega = parse_form("dx1^dy1 + dx2^dy2", chart)
    v = VectorFieldChart.parse(["x1/2", "y1/2", "x2/2", "y2/2"], chart)
    return chart, omega, v


def polar_r4():
    """Polar coordinates ``(r1, theta1, r2, theta2)``: ``omega = r1 dr1^dtheta1 + r2 dr2^dtheta2``,
    ``v = (r1 d/dr1 + r2 d/dr2) / 2``, and the unit-sphere parametrization."""
    from .planefields import s3_ambient

    polar, _, param = s3_ambient()
    omega = parse_form("r1*dr1^dtheta1 + r2*dr2^dtheta2", polar)
    v = VectorFieldChart.parse(["r1/2", "0", "r2/2", "0"], polar)
    return polar, omega, v, param


__all__ = [
    "oriented_kernel_basis",
    "restrict_to_plane_field",
    "DominationResult",
    "weak_domination_check",
    "FillingCertificate",
    "check_taut_hypotheses",
    "filling_form",
    "weak_filling_form",
    "taut_t3_example",
    "DilatingResult",
    "check_dilating",
    "identity_residual",
    "random_points",
    "BoundaryForm",
    "induced_boundary_form",
    "standard_r4",
    "polar_r4",
]
