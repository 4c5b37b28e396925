"""Differential forms with expression coefficients on a single chart.

A k-form stores one coefficient per strictly increasing index tuple, the
coefficient of ``dx_{i1} ^ ... ^ dx_{ik}`` in chart-variable order. Zero
coefficients are dropped, so ``coeffs == {}`` is the zero form.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .errors import ChartMismatchError, DegreeError, DomainError, InputError, UnknownVariableError

ZERO_TOL = 1e-9
MARGIN = 1e-6


def perm_sign(seq):
    """Sign of the permutation sorting ``seq`` (0 if an entry repeats)."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


class KForm:
    __slots__ = ("chart", "degree", "coeffs")

    def __init__(self, chart, degree, coeffs=None):
        if not 0 <= degree <= chart.dim:
            raise DegreeError(f"degree {degree} impossible on {chart.dim}-dimensional chart {chart.name!r}")
        clean = {}
        for idx, c in (coeffs or {}).items():
            idx = tuple(int(i) for i in idx)
            if len(idx) != degree or any(b <= a for a, b in zip(idx, idx[1:])):
                raise DegreeError(f"index tuple {idx} is not strictly increasing of length {degree}")
            if any(i < 0 or i >= chart.dim for i in idx):
                raise DegreeError(f"index tuple {idx} out of range for chart {chart.name!r}")
            c = ex.check_chart(ex.const(c) if not isinstance(c, ex.Expr) else c, chart)
            if not ex.is_zero(c):
                clean[idx] = c
        self.chart = chart
        self.degree = degree
        self.coeffs = clean

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, chart, degree):
        return cls(chart, degree, {})

    @classmethod
    def scalar(cls, chart, e):
        return cls(chart, 0, {(): e})

    @classmethod
    def basis(cls, chart, *names):
        """``basis(chart, 'x', 'z') == dx ^ dz``."""
        idx = [chart.index(n) for n in names]
        s = perm_sign(idx)
        if s == 0:
            return cls.zero(chart, len(idx))
        return cls(chart, len(idx), {tuple(sorted(idx)): ex.Num(s)})

    @classmethod
    def one_form(cls, chart, components):
        """1-form from one coefficient per chart variable (in chart order)."""
        if len(components) != chart.dim:
            raise DegreeError("need one component per chart variable")
        return cls(chart, 1, {(i,): ex.const(c) if not isinstance(c, ex.Expr) else c for i, c in enumerate(components)})

    @classmethod
    def volume(cls, chart, density=1):
        return cls(chart, chart.dim, {tuple(range(chart.dim)): density})

    # -- algebra ------------------------------------------------------------

    def _same_space(self, other):
        if not isinstance(other, KForm):
            raise InputError("cannot combine a form with a scalar by addition")
        if other.chart != self.chart:
            raise ChartMismatchError(f"charts {self.chart.name!r} and {other.chart.name!r} differ")
        if other.degree != self.degree:
            raise DegreeError(f"cannot add a {self.degree}-form and a {other.degree}-form")

    def __add__(self, other):
        self._same_space(other)
        out = dict(self.coeffs)
        for idx, c in other.coeffs.items():
            out[idx] = ex.add(out[idx], c) if idx in out else c
        return KForm(self.chart, self.degree, out)

    def __radd__(self, other):
        raise InputError("cannot combine a form with a scalar by addition")

    def __sub__(self, other):
        self._same_space(other)
        return self + (-other)

    def __rsub__(self, other):
        raise InputError("cannot combine a form with a scalar by subtraction")

    def __neg__(self):
        return KForm(self.chart, self.degree, {i: ex.neg(c) for i, c in self.coeffs.items()})

    def scale(self, factor):
        factor = ex.const(factor) if not isinstance(factor, ex.Expr) else factor
        return KForm(self.chart, self.degree, {i: ex.mul(factor, c) for i, c in self.coeffs.items()})

    def __mul__(self, other):
        if isinstance(other, KForm):
            return wedge(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        if isinstance(other, KForm):
            return wedge(other, self)
        return self.scale(other)

    def __truediv__(self, other):
        if isinstance(other, KForm):
            raise InputError("cannot divide by a form")
        other = ex.const(other) if not isinstance(other, ex.Expr) else other
        return KForm(self.chart, self.degree, {i: ex.div(c, other) for i, c in self.coeffs.items()})

    def __xor__(self, other):
        return wedge(self, other)

    def __eq__(self, other):
        return (
            isinstance(other, KForm)
            and self.chart == other.chart
            and self.degree == other.degree
            and self.coeffs == other.coeffs
        )

    def __hash__(self):
        return hash((self.chart.name, self.degree, frozenset(self.coeffs.items())))

    def is_zero(self):
        return not self.coeffs

    def coefficient(self, *names_or_idx):
        """Coefficient of the given basis element, e.g. ``f.coefficient('x', 'y')``."""
        if len(names_or_idx) == 1 and isinstance(names_or_idx[0], tuple):
            idx = names_or_idx[0]
        else:
            idx = tuple(self.chart.index(n) if isinstance(n, str) else n for n in names_or_idx)
        s = perm_sign(idx)
        if s == 0:
            return ex.ZERO
        c = self.coeffs.get(tuple(sorted(idx)), ex.ZERO)
        return c if s > 0 else ex.neg(c)

    @property
    def density(self):
        """Coefficient against the chart's positive volume form (top degree only)."""
        if self.degree != self.chart.dim:
            raise DegreeError("density is defined for top-degree forms only")
        return self.coeffs.get(tuple(range(self.chart.dim)), ex.ZERO)

    def map_coeffs(self, fn):
        return KForm(self.chart, self.degree, {i: fn(c) for i, c in self.coeffs.items()})

    # -- numerics -----------------------------------------------------------

    def values(self, coords):
        """``{index: array}`` of coefficient values at the given coordinate arrays."""
        return {i: ex.evaluate_array(c, self.chart.variables, coords) for i, c in self.coeffs.items()}

    def on_grid(self, grid):
        if grid.chart.variables != self.chart.variables:
            raise ChartMismatchError("grid and form live on different charts")
        return {i: ex.eval_grid(c, grid) for i, c in self.coeffs.items()}

    def max_norm(self, grid):
        """Largest absolute coefficient value over the grid (0 for the zero form)."""
        vals = self.on_grid(grid)
        return max((float(np.max(np.abs(v))) for v in vals.values()), default=0.0)

    def density_values(self, grid):
        if self.degree != self.chart.dim:
            raise DegreeError("density is defined for top-degree forms only")
        c = self.density
        return np.array(np.broadcast_to(ex.eval_grid(c, grid), (grid.size,)), dtype=float)

    def apply(self, vectors, coords):
        """Evaluate the form on ``degree`` vector fields given as arrays.

        ``vectors`` is a sequence of arrays shaped ``(dim, N)``; ``coords``
        are the base points (one array per chart variable, length ``N``).
        """
        if len(vectors) != self.degree:
            raise DegreeError(f"{self.degree}-form needs {self.degree} vectors")
        vals = self.values(coords)
        n = np.broadcast_shapes(*(np.shape(c) for c in coords)) if coords else ()
        total = np.zeros(n)
        for idx, v in vals.items():
            if self.degree == 0:
                total = total + v
                continue
            minor = np.stack([np.stack([np.asarray(vec)[i] for vec in vectors], axis=0) for i in idx], axis=0)
            # minor[a, b] = vectors[b][idx[a]]; determinant over the leading axes
            det = np.linalg.det(np.moveaxis(minor, (0, 1), (-2, -1)))
            total = total + v * det
        return total

    # -- printing -----------------------------------------------------------

    def to_text(self):
        if not self.coeffs:
            return "0"
        parts = []
        for idx in sorted(self.coeffs):
            c = self.coeffs[idx]
            basis = "^".join("d" + self.chart.variables[i] for i in idx)
            if not idx:
                parts.append(f"({ex.to_text(c)})")
            elif ex.is_one(c):
                parts.append(basis)
            else:
                parts.append(f"({ex.to_text(c)}) * {basis}")
        return " + ".join(parts)

    def __repr__(self):
        return f"KForm[{self.chart.name}, deg {self.degree}]({self.to_text()})"


@dataclass(frozen=True)
class VectorFieldChart:
    chart: ex.Chart
    components: tuple

    def __post_init__(self):
        comps = tuple(ex.const(c) if not isinstance(c, ex.Expr) else c for c in self.components)
        if len(comps) != self.chart.dim:
            raise DegreeError("vector field needs one component per chart variable")
        for c in comps:
            ex.check_chart(c, self.chart)
        object.__setattr__(self, "components", comps)

    @classmethod
    def parse(cls, texts, chart):
        return cls(chart, tuple(ex.parse_expr(t, chart) for t in texts))

    @classmethod
    def coordinate(cls, chart, name, factor=1):
        comps = [ex.ZERO] * chart.dim
        comps[chart.index(name)] = ex.const(factor)
        return cls(chart, tuple(comps))

    def scale(self, factor):
        return VectorFieldChart(self.chart, tuple(ex.mul(factor, c) for c in self.components))

    def values(self, coords):
        return np.stack([np.broadcast_to(ex.evaluate_array(c, self.chart.variables, coords), np.broadcast_shapes(*(np.shape(x) for x in coords))) for c in self.components])


@dataclass(frozen=True)
class ChartMap:
    """Smooth map from ``source`` into ``target`` given by one tree per target variable."""

    source: ex.Chart
    target: ex.Chart
    components: tuple

    def __post_init__(self):
        comps = tuple(ex.const(c) if not isinstance(c, ex.Expr) else c for c in self.components)
        if len(comps) != self.target.dim:
            raise DegreeError("chart map needs one component per target variable")
        for c in comps:
            ex.check_chart(c, self.source)
        object.__setattr__(self, "components", comps)

    def jacobian(self):
        """Symbolic matrix ``J[i][j] = d(target_i)/d(source_j)``."""
        return tuple(tuple(ex.partial(c, v) for v in self.source.variables) for c in self.components)

    def apply(self, coords):
        shape = np.broadcast_shapes(*(np.shape(c) for c in coords))
        return tuple(np.broadcast_to(ex.evaluate_array(c, self.source.variables, coords), shape) for c in self.components)

    def jacobian_values(self, coords):
        shape = np.broadcast_shapes(*(np.shape(c) for c in coords))
        J = self.jacobian()
        return np.array(
            [[np.broadcast_to(ex.evaluate_array(e, self.source.variables, coords), shape) for e in row] for row in J]
        )

    def substitution(self):
        return dict(zip(self.target.variables, self.components))


@dataclass(frozen=True)
class SurfacePatch(ChartMap):
    """Parametrized surface: a chart map from a 2-dimensional parameter chart.

    ``orientation`` is +1 when the parameter order is the surface's orientation.
    """

    orientation: int = 1

    def __post_init__(self):
        super().__post_init__()
        if self.source.dim != 2:
            raise DegreeError("a surface patch needs a 2-dimensional parameter chart")

    def check_immersion(self, grid, tol=1e-9):
        """Raise ``DomainError`` where the Jacobian has rank < 2 on ``grid``."""
        J = self.jacobian_values(grid.points())  # (target, 2, N)
        mats = np.moveaxis(J, -1, 0)
        sv = np.linalg.svd(mats, compute_uv=False)[:, -1]
        bad = sv <= tol
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            where = [float(p[k]) for p in grid.points()]
            raise DomainError(f"surface is not immersed at parameter point {where}")
        return float(sv.min())


def parse_surface(text, target, domain, periodic=None, name="surface"):
    """Parse ``"u,v -> (e1, e2, e3)"`` into a :class:`SurfacePatch` (or chart map)."""
    if "->" not in text:
        raise InputError("surface spec must look like 'u,v -> (expr, expr, expr)'")
    lhs, rhs = text.split("->", 1)
    params = [p.strip() for p in lhs.split(",") if p.strip()]
    source = ex.make_chart(name, params, domain, periodic)
    rhs = rhs.strip()
    if not (rhs.startswith("(") and rhs.endswith(")")):
        raise InputError("surface components must be parenthesized")
    comps = _split_top_level(rhs[1:-1])
    exprs = tuple(ex.parse_expr(c, source) for c in comps)
    if len(source.variables) == 2:
        return SurfacePatch(source, target, exprs)
    return ChartMap(source, target, exprs)


def _split_top_level(text):
    parts, depth, start = [], 0, 0
    for k, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append(text[start:k])
            start = k + 1
    parts.append(text[start:])
    return [p.strip() for p in parts]


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def _check_charts(*objs):
    charts = {o.chart for o in objs}
    if len(charts) != 1:
        raise ChartMismatchError(f"objects live on different charts: {sorted(c.name for c in charts)}")
    return objs[0].chart


def exterior_d(f):
    """Exterior derivative; raises ``DegreeError`` for top-degree input."""
    chart = f.chart
    if f.degree >= chart.dim:
        raise DegreeError(f"d of a top-degree form ({f.degree}) is not defined on a {chart.dim}-chart")
    out = {}
    for idx, c in f.coeffs.items():
        for j, var in enumerate(chart.variables):
            if j in idx:
                continue
            dc = ex.partial(c, var)
            if ex.is_zero(dc):
                continue
            sign = (-1) ** sum(1 for i in idx if i < j)
            new = tuple(sorted(idx + (j,)))
            term = dc if sign > 0 else ex.neg(dc)
            out[new] = ex.add(out[new], term) if new in out else term
    return KForm(chart, f.degree + 1, out)


def wedge(a, b):
    chart = _check_charts(a, b)
    if a.degree + b.degree > chart.dim:
        raise DegreeError(f"wedge of degrees {a.degree}+{b.degree} exceeds dimension {chart.dim}")
    out = {}
    for I, ca in a.coeffs.items():
        for J, cb in b.coeffs.items():
            s = perm_sign(I + J)
            if s == 0:
                continue
            new = tuple(sorted(I + J))
            term = ex.mul(ca, cb)
            term = term if s > 0 else ex.neg(term)
            out[new] = ex.add(out[new], term) if new in out else term
    return KForm(chart, a.degree + b.degree, out)


def interior_product(v, f):
    chart = _check_charts(v, f)
    if f.degree == 0:
        raise DegreeError("interior product of a 0-form is not defined")
    out = {}
    for idx, c in f.coeffs.items():
        for p, i in enumerate(idx):
            vi = v.components[i]
            if ex.is_zero(vi):
                continue
            rest = idx[:p] + idx[p + 1 :]
            term = ex.mul(vi, c)
            term = term if p % 2 == 0 else ex.neg(term)
            out[rest] = ex.add(out[rest], term) if rest in out else term
    return KForm(chart, f.degree - 1, out)


def _symbolic_det(rows):
    n = len(rows)
    if n == 0:
        return ex.ONE
    if n == 1:
        return rows[0][0]
    if n == 2:
        return ex.sub(ex.mul(rows[0][0], rows[1][1]), ex.mul(rows[0][1], rows[1][0]))
    total = ex.ZERO
    for perm in itertools.permutations(range(n)):
        term = ex.ONE
        for r, c in enumerate(perm):
            term = ex.mul(term, rows[r][c])
            if ex.is_zero(term):
                break
        if ex.is_zero(term):
            continue
        total = ex.add(total, term) if perm_sign(perm) > 0 else ex.sub(total, term)
    return total


def pullback(m, f):
    """Pull ``f`` back along the chart map ``m`` (target chart must match)."""
    if m.target != f.chart:
        raise ChartMismatchError(f"map targets {m.target.name!r} but form lives on {f.chart.name!r}")
    k = f.degree
    if k > m.source.dim:
        raise DegreeError(f"cannot pull a {k}-form back to a {m.source.dim}-dimensional chart")
    J = m.jacobian()
    subs = m.substitution()
    out = {}
    for idx, c in f.coeffs.items():
        c_src = ex.substitute(c, subs)
        if ex.is_zero(c_src):
            continue
        for cols in itertools.combinations(range(m.source.dim), k):
            minor = _symbolic_det([[J[i][j] for j in cols] for i in idx])
            if ex.is_zero(minor):
                continue
            term = ex.mul(c_src, minor)
            out[cols] = ex.add(out[cols], term) if cols in out else term
    return KForm(m.source, k, out)


def lie_derivative(v, f):
    """Lie derivative by Cartan's formula ``d(i_v f) + i_v(d f)``."""
    chart = _check_charts(v, f)
    if f.degree == 0:
        return interior_product(v, exterior_d(f))
    first = exterior_d(interior_product(v, f))
    if f.degree == chart.dim:
        return first
    return first + interior_product(v, exterior_d(f))


def extend(f, chart):
    """Re-express ``f`` on a chart whose variables contain ``f.chart``'s (pullback by projection)."""
    try:
        pos = [chart.index(v) for v in f.chart.variables]
    except UnknownVariableError:
        raise ChartMismatchError(f"chart {chart.name!r} does not contain all variables of {f.chart.name!r}") from None
    out = {}
    for idx, c in f.coeffs.items():
        new = [pos[i] for i in idx]
        s = perm_sign(new)
        key = tuple(sorted(new))
        out[key] = c if s > 0 else ex.neg(c)
    return KForm(chart, f.degree, out)


def extend_field(v, chart):
    comps = [ex.ZERO] * chart.dim
    for var, c in zip(v.chart.variables, v.components):
        comps[chart.index(var)] = c
    return VectorFieldChart(chart, tuple(comps))


def product_chart(chart, var="t", interval=(-1.0, 1.0), first=True):
    """``chart x interval``; with ``first=True`` the new variable leads the orientation."""
    if first:
        return ex.Chart(chart.name + f"x[{var}]", (var,) + chart.variables, (interval,) + chart.domain,
                        (False,) + chart.periodic, chart.singular)
    return ex.Chart(chart.name + f"x[{var}]", chart.variables + (var,), chart.domain + (interval,),
                    chart.periodic + (False,), chart.singular)


def slice_map(chart, big, **fixed):
    """Inclusion of ``chart`` into ``big`` with the extra variables held at constants."""
    comps = []
    for var in big.variables:
        if var in fixed:
            comps.append(ex.const(fixed[var]))
        else:
            comps.append(chart.var(var))
    return ChartMap(chart, big, tuple(comps))


# ---------------------------------------------------------------------------
# Form literals
# ---------------------------------------------------------------------------


def parse_form(text, chart):
    """Parse a form literal such as ``"dz - y*dx"`` or ``"x*dx^dy"``."""

    def resolve(name, pos, src):
        if name in chart.variables:
            return ex.Var(name)
        if name.startswith("d") and name[1:] in chart.variables:
            return KForm.basis(chart, name[1:])
        if name in ex.CONSTANTS:
            return ex.NamedConst(name)
        raise UnknownVariableError(f"unknown name {name!r} for chart {chart.name!r}", src, pos)

    def wedge_op(a, b, pos):
        if isinstance(a, KForm) and isinstance(b, KForm):
            return wedge(a, b)
        raise ex.ParseError("'^' between forms needs forms on both sides", text, pos)

    value = ex.Parser(text, resolve, wedge_op).parse()
    if isinstance(value, ex.Expr):
        return KForm.scalar(chart, value)
    return value


__all__ = [
    "ZERO_TOL",
    "MARGIN",
    "perm_sign",
    "KForm",
    "VectorFieldChart",
    "ChartMap",
    "SurfacePatch",
    "parse_surface",
    "exterior_d",
    "wedge",
    "interior_product",
    "pullback",
    "lie_derivative",
    "extend",
    "extend_field",
    "product_chart",
    "slice_map",
    "parse_form",
]
