"""Closed-form chart functions: expression trees, parser, derivatives, evaluation.

Trees are immutable and hashable. Every node is built through the smart
constructors below, which apply only local rules (0+e -> e, 1*e -> e,
0*e -> 0, e^1 -> e, --e -> e) and fold exact rational constants. No other
simplification is attempted; identities are checked numerically on grids.

Grammar accepted by :func:`parse_expr`::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := base ('^' ['-'] integer)?
    base   := number | name | '(' expr ')' | func '(' expr ')'
    func   := sin | cos | exp | sqrt | pos | step

``pos(u) = max(u, 0)`` and ``step(u) = [u >= 0]`` exist so that cutoff
functions with compact support can be written as trees.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .errors import DomainError, InputError, ParseError, UnknownVariableError

FUNCTIONS = ("sin", "cos", "exp", "sqrt", "pos", "step")
CONSTANTS = {"pi": math.pi, "e": math.e}
RESERVED = set(FUNCTIONS) | set(CONSTANTS)


# ---------------------------------------------------------------------------
# Charts and grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Chart:
    """A coordinate chart with a rectangular domain.

    The order of ``variables`` fixes the orientation: ``dv_1 ^ ... ^ dv_n``
    is the positive volume form. ``singular`` lists hyperplanes ``var = value``
    (e.g. ``r = 0`` for cylindrical charts) that grids avoid by an inset.
    ``cartesian`` optionally maps chart coordinates to Euclidean ones; it is
    used for plotting and for merging coincident points.
    """

    name: str
    variables: tuple
    domain: tuple
    periodic: tuple = None
    singular: tuple = ()
    cartesian: tuple = None

    def __post_init__(self):
        variables = tuple(self.variables)
        domain = tuple((float(lo), float(hi)) for lo, hi in self.domain)
        periodic = tuple(self.periodic) if self.periodic is not None else (False,) * len(variables)
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "periodic", tuple(bool(p) for p in periodic))
        object.__setattr__(self, "singular", tuple((v, float(x)) for v, x in self.singular))
        if self.cartesian is not None:
            object.__setattr__(self, "cartesian", tuple(self.cartesian))
        if len(set(variables)) != len(variables):
            raise InputError(f"chart {self.name!r}: duplicate variable names {variables}")
        if len(domain) != len(variables) or len(self.periodic) != len(variables):
            raise InputError(f"chart {self.name!r}: domain/periodic length mismatch")
        for v in variables:
            if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", v) or v in RESERVED:
                raise InputError(f"chart {self.name!r}: invalid variable name {v!r}")
        for v, (lo, hi) in zip(variables, domain):
            if not lo < hi:
                raise InputError(f"chart {self.name!r}: empty interval for {v}")
        for v, _ in self.singular:
            if v not in variables:
                raise InputError(f"chart {self.name!r}: singular locus on unknown variable {v}")

    @property
    def dim(self):
        return len(self.variables)

    def index(self, name):
        try:
            return self.variables.index(name)
        except ValueError:
            raise UnknownVariableError(f"unknown variable {name!r} for chart {self.name!r}") from None

    def var(self, name):
        self.index(name)
        return Var(name)

    def coords(self):
        return tuple(Var(v) for v in self.variables)

    def with_domain(self, **intervals):
        """Copy of the chart with some intervals replaced, e.g. ``r=(0.1, pi)``."""
        domain = list(self.domain)
        for name, interval in intervals.items():
            domain[self.index(name)] = interval
        return Chart(self.name, self.variables, domain, self.periodic, self.singular, self.cartesian)

    def swapped(self, i, j):
        """Same coordinates with variables ``i`` and ``j`` exchanged (orientation reversed)."""
        order = list(range(self.dim))
        order[i], order[j] = order[j], order[i]
        return Chart(
            self.name + "~",
            [self.variables[k] for k in order],
            [self.domain[k] for k in order],
            [self.periodic[k] for k in order],
            self.singular,
            self.cartesian,
        )

    def grid(self, n=21, inset=1e-3, interior=False, domain=None):
        return Grid.build(self, n, inset=inset, interior=interior, domain=domain)

    def contains(self, point):
        point = np.asarray(point, dtype=float)
        for x, (lo, hi), per in zip(point, self.domain, self.periodic):
            if not per and not (lo <= x <= hi):
                return False
        return True

    def on_singular_locus(self, point):
        return any(point[self.index(v)] == value for v, value in self.singular)

    def to_cartesian(self, *coords):
        if self.cartesian is None:
            return tuple(np.asarray(c, dtype=float) for c in coords)
        return tuple(evaluate_array(e, self.variables, coords) for e in self.cartesian)

    def describe(self):
        return {
            "name": self.name,
            "variables": list(self.variables),
            "domain": [list(d) for d in self.domain],
            "periodic": list(self.periodic),
            "singular": [[v, x] for v, x in self.singular],
        }


def make_chart(name, variables, domain, periodic=None, singular=(), cartesian=None):
    if isinstance(variables, str):
        variables = [v.strip() for v in variables.split(",") if v.strip()]
    chart = Chart(name, variables, domain, periodic, singular)
    if cartesian is not None:
        exprs = tuple(parse_expr(c, chart) if isinstance(c, str) else c for c in cartesian)
        chart = Chart(name, variables, domain, periodic, singular, exprs)
    return chart


@dataclass
class Grid:
    """Tensor-product sample grid on a chart.

    Periodic axes are sampled without the duplicate endpoint. Endpoints that
    lie on a declared singular locus are moved inward by ``inset`` times the
    interval width; ``interior=True`` drops the outer layer of every
    non-periodic axis instead.
    """

    chart: Chart
    axes: tuple
    inset: float = 0.0
    interior: bool = False
    _points: tuple = field(default=None, repr=False)

    @classmethod
    def build(cls, chart, n=21, inset=1e-3, interior=False, domain=None):
        counts = (n,) * chart.dim if np.isscalar(n) else tuple(n)
        if len(counts) != chart.dim:
            raise InputError("grid resolution does not match chart dimension")
        if min(counts) < 1:
            raise InputError("grid resolution must be positive")
        if domain is None:
            domain = chart.domain
        elif isinstance(domain, Mapping):
            domain = chart.with_domain(**domain).domain
        else:
            domain = tuple(domain)
        axes = []
        for k, (var, (lo, hi), per, m) in enumerate(zip(chart.variables, domain, chart.periodic, counts)):
            width = hi - lo
            if per:
                ax = np.linspace(lo, hi, m, endpoint=False)
            else:
                sing = [x for v, x in chart.singular if v == var]
                if interior:
                    ax = np.linspace(lo, hi, m + 2)[1:-1]
                else:
                    if lo in sing:
                        lo = lo + inset * width
                    if hi in sing:
                        hi = hi - inset * width
                    ax = np.linspace(lo, hi, m) if m > 1 else np.array([0.5 * (lo + hi)])
                for x in sing:
                    ax = np.where(ax == x, x + inset * width, ax)
            axes.append(ax)
        return cls(chart, tuple(axes), inset, interior)

    @property
    def shape(self):
        return tuple(len(a) for a in self.axes)

    @property
    def size(self):
        return int(np.prod(self.shape))

    def points(self):
        """Flattened coordinate arrays, one per chart variable."""
        if self._points is None:
            mesh = np.meshgrid(*self.axes, indexing="ij")
            self._points = tuple(m.ravel() for m in mesh)
        return self._points

    def spec(self):
        return {
            "chart": self.chart.name,
            "shape": list(self.shape),
            "bounds": [[float(a[0]), float(a[-1])] for a in self.axes],
            "inset": self.inset,
            "interior": self.interior,
        }


# ---------------------------------------------------------------------------
# Expression nodes
# ---------------------------------------------------------------------------


class Expr:
    """Base class of expression nodes. Use the module-level constructors."""

    __slots__ = ("_key", "_hash", "_cache")
    precedence = 100

    def __init__(self, key):
        self._key = key
        self._hash = hash((type(self).__name__, key))
        self._cache = None

    def __eq__(self, other):
        return type(self) is type(other) and self._hash == other._hash and self._key == other._key

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Expr({to_text(self)!r})"

    def __str__(self):
        return to_text(self)

    # arithmetic builds through the smart constructors
    def __add__(self, other):
        other = _coerce(other)
        return NotImplemented if other is None else add(self, other)

    def __radd__(self, other):
        other = _coerce(other)
        return NotImplemented if other is None else add(other, self)

    def __sub__(self, other):
        other = _coerce(other)
        return NotImplemented if other is None else sub(self, other)

    def __rsub__(self, other):
        other = _coerce(other)
        return NotImplemented if other is None else sub(other, self)

    def __mul__(self, other):
        other = _coerce(other)
        return NotImplemented if other is None else mul(self, other)

    def __rmul__(self, other):
        other = _coerce(other)
        return NotImplemented if other is None else mul(other, self)

    def __truediv__(self, other):
        other = _coerce(other)
        return NotImplemented if other is None else div(self, other)

    def __rtruediv__(self, other):
        other = _coerce(other)
        return NotImplemented if other is None else div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, n):
        if isinstance(n, Num) and n.value.denominator == 1:
            n = int(n.value)
        if not isinstance(n, int):
            raise InputError("only integer powers are supported")
        return power(self, n)

    def children(self):
        return ()


class Num(Expr):
    __slots__ = ()

    def __init__(self, value):
        super().__init__(Fraction(value))

    @property
    def value(self):
        return self._key


class NamedConst(Expr):
    __slots__ = ()

    def __init__(self, name):
        if name not in CONSTANTS:
            raise InputError(f"unknown constant {name!r}")
        super().__init__(name)

    @property
    def name(self):
        return self._key


class Var(Expr):
    __slots__ = ()

    def __init__(self, name):
        super().__init__(name)

    @property
    def name(self):
        return self._key


class _Binary(Expr):
    __slots__ = ()
    symbol = "?"

    def __init__(self, a, b):
        super().__init__((a, b))

    @property
    def left(self):
        return self._key[0]

    @property
    def right(self):
        return self._key[1]

    def children(self):
        return self._key


class Add(_Binary):
    __slots__ = ()
    symbol, precedence = "+", 1


class Sub(_Binary):
    __slots__ = ()
    symbol, precedence = "-", 1


class Mul(_Binary):
    __slots__ = ()
    symbol, precedence = "*", 2


class Div(_Binary):
    __slots__ = ()
    symbol, precedence = "/", 2


class Neg(Expr):
    __slots__ = ()
    precedence = 3

    def __init__(self, a):
        super().__init__(a)

    @property
    def arg(self):
        return self._key

    def children(self):
        return (self._key,)


class Pow(Expr):
    __slots__ = ()
    precedence = 4

    def __init__(self, base, n):
        super().__init__((base, int(n)))

    @property
    def base(self):
        return self._key[0]

    @property
    def exponent(self):
        return self._key[1]

    def children(self):
        return (self._key[0],)


class Func(Expr):
    __slots__ = ()

    def __init__(self, name, arg):
        if name not in FUNCTIONS:
            raise InputError(f"unknown function {name!r}")
        super().__init__((name, arg))

    @property
    def name(self):
        return self._key[0]

    @property
    def arg(self):
        return self._key[1]

    def children(self):
        return (self._key[1],)


ZERO = Num(0)
ONE = Num(1)


def _coerce(x):
    if isinstance(x, Expr):
        return x
    if isinstance(x, (bool, np.bool_)):
        return None
    if isinstance(x, (int, np.integer, Fraction)):
        return Num(x)
    if isinstance(x, (float, np.floating)):
        return const(float(x))
    return None


def const(x):
    """Exact constant node; floats are stored exactly (shortest repr when it round-trips)."""
    if isinstance(x, Expr):
        return x
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            raise InputError(f"non-finite constant {x}")
        short = Fraction(repr(x))
        return Num(short if float(short) == x else Fraction(x))
    return Num(Fraction(x))


def is_zero(e):
    return isinstance(e, Num) and e.value == 0


def is_one(e):
    return isinstance(e, Num) and e.value == 1


# ---------------------------------------------------------------------------
# Smart constructors (the declared local rules)
# ---------------------------------------------------------------------------


def add(a, b):
    a, b = _coerce(a), _coerce(b)
    if is_zero(a):
        return b
    if is_zero(b):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    return Add(a, b)


def sub(a, b):
    a, b = _coerce(a), _coerce(b)
    if is_zero(b):
        return a
    if is_zero(a):
        return neg(b)
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    return Sub(a, b)


def mul(a, b):
    a, b = _coerce(a), _coerce(b)
    if is_zero(a) or is_zero(b):
        return ZERO
    if is_one(a):
        return b
    if is_one(b):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    return Mul(a, b)


def div(a, b):
    a, b = _coerce(a), _coerce(b)
    if is_zero(b):
        raise DomainError("division by the constant 0")
    if is_one(b):
        return a
    if is_zero(a):
        return ZERO
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value / b.value)
    return Div(a, b)


def neg(a):
    a = _coerce(a)
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def power(a, n):
    a = _coerce(a)
    n = int(n)
    if n == 0:
        return ONE
    if n == 1:
        return a
    if isinstance(a, Num):
        if a.value == 0 and n < 0:
            raise DomainError("0 raised to a negative power")
        return Num(a.value**n)
    return Pow(a, n)


def _exact_sqrt(q):
    if q < 0:
        return None
    p, r = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if p * p == q.numerator and r * r == q.denominator:
        return Fraction(p, r)
    return None


def func(name, a):
    a = _coerce(a)
    if isinstance(a, Num):
        v = a.value
        if name in ("sin",) and v == 0:
            return ZERO
        if name in ("cos", "exp") and v == 0:
            return ONE
        if name == "sqrt":
            if v < 0:
                raise DomainError("sqrt of a negative constant")
            root = _exact_sqrt(v)
            if root is not None:
                return Num(root)
        if name == "pos":
            return Num(max(v, 0))
        if name == "step":
            return Num(1 if v >= 0 else 0)
    return Func(name, a)


def sin(a):
    return func("sin", a)


def cos(a):
    return func("cos", a)


def exp(a):
    return func("exp", a)


def sqrt(a):
    return func("sqrt", a)


def pos(a):
    return func("pos", a)


def step(a):
    return func("step", a)


pi = NamedConst("pi")
E = NamedConst("e")


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------


def _num_text(q):
    if q.denominator == 1:
        return str(q.numerator) if q >= 0 else f"({q.numerator})"
    return f"({q.numerator}/{q.denominator})"


def to_text(e):
    """Render a tree in the parser's grammar; ``parse_expr(to_text(e)) == e``."""
    if isinstance(e, Num):
        return _num_text(e.value)
    if isinstance(e, (NamedConst, Var)):
        return e.name
    if isinstance(e, _Binary):
        left = to_text(e.left)
        if e.left.precedence < e.precedence:
            left = f"({left})"
        right = to_text(e.right)
        if e.right.precedence <= e.precedence:
            right = f"({right})"
        return f"{left} {e.symbol} {right}"
    if isinstance(e, Neg):
        inner = to_text(e.arg)
        if isinstance(e.arg, (_Binary,)):
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, Pow):
        base = to_text(e.base)
        if not isinstance(e.base, (Var, NamedConst, Func)):
            base = f"({base})"
        return f"{base}^{e.exponent}"
    if isinstance(e, Func):
        return f"{e.name}({to_text(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^(),]))"
)


def tokenize(text):
    tokens, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[bad]!r}", text, bad)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class Parser:
    """Recursive-descent parser over the expression grammar.

    Operands are combined with Python operators, so the same parser builds
    plain trees or, with a different ``resolve`` hook, differential forms.
    ``wedge`` (if given) handles ``a ^ b`` when ``b`` is not an integer.
    """

    def __init__(self, text, resolve, wedge=None):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0
        self.resolve = resolve
        self.wedge = wedge

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value:
            found = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {value!r}, found {found}", self.text, pos)

    def error(self, message, pos):
        raise ParseError(message, self.text, pos)

    def parse(self):
        if self.peek()[0] == "end":
            self.error("empty expression", 0)
        value = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            self.error(f"unexpected token {val!r}", pos)
        return value

    def expr(self):
        value = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self):
        value = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op, pos = self.take()[1], self.peek()[2]
            rhs = self.unary()
            if op == "*":
                value = value * rhs
            else:
                if not isinstance(rhs, Expr):
                    self.error("cannot divide by a form", pos)
                value = value / rhs
        return value

    def unary(self):
        if self.peek() == ("op", "-", self.peek()[2]):
            self.take()
            return -self.unary()
        return self.power()

    def power(self):
        base = self.base()
        while self.peek()[1] == "^" and self.peek()[0] == "op":
            self.take()
            kind, val, pos = self.peek()
            sign = 1
            if val == "-" and kind == "op" and self.tokens[self.i + 1][0] == "num":
                self.take()
                kind, val, pos = self.peek()
                sign = -1
            if kind == "num":
                self.take()
                if not re.fullmatch(r"\d+", val):
                    self.error("exponent must be an integer", pos)
                if not isinstance(base, Expr):
                    self.error("cannot raise a form to a power", pos)
                base = base ** (sign * int(val))
                continue
            if self.wedge is None:
                self.error("exponent must be an integer", pos)
            base = self.wedge(base, self.base(), pos)
        return base

    def base(self):
        kind, val, pos = self.take()
        if kind == "num":
            try:
                return Num(Fraction(val))
            except (ValueError, ZeroDivisionError):
                self.error(f"bad number {val!r}", pos)
        if kind == "name":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                if not isinstance(arg, Expr):
                    self.error(f"{val}() needs a scalar argument", pos)
                return func(val, arg)
            return self.resolve(val, pos, self.text)
        if val == "(":
            value = self.expr()
            self.expect(")")
            return value
        found = "end of input" if kind == "end" else repr(val)
        self.error(f"unexpected {found}", pos)


def _scalar_resolver(chart):
    def resolve(name, pos, text):
        if chart is not None and name in chart.variables:
            return Var(name)
        if name in CONSTANTS:
            return NamedConst(name)
        where = f" for chart {chart.name!r}" if chart is not None else ""
        raise UnknownVariableError(f"unknown variable {name!r}{where}", text, pos)

    return resolve


def parse_expr(text, chart=None):
    """Parse ``text`` into a tree whose variables all belong to ``chart``.

    With ``chart=None`` only constants are accepted.
    """
    return Parser(text, _scalar_resolver(chart)).parse()


# ---------------------------------------------------------------------------
# Structural operations
# ---------------------------------------------------------------------------


def free_vars(e):
    out = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            out.add(node.name)
        else:
            stack.extend(node.children())
    return out


def check_chart(e, chart):
    unknown = free_vars(e) - set(chart.variables)
    if unknown:
        raise UnknownVariableError(f"variables {sorted(unknown)} not in chart {chart.name!r}")
    return e


def _rebuild(e, children):
    if isinstance(e, Add):
        return add(*children)
    if isinstance(e, Sub):
        return sub(*children)
    if isinstance(e, Mul):
        return mul(*children)
    if isinstance(e, Div):
        return div(*children)
    if isinstance(e, Neg):
        return neg(children[0])
    if isinstance(e, Pow):
        return power(children[0], e.exponent)
    if isinstance(e, Func):
        return func(e.name, children[0])
    return e


def substitute(e, mapping):
    """Replace variables by trees: ``mapping`` is ``{name: Expr}``."""
    mapping = {k: _coerce(v) for k, v in mapping.items()}
    memo = {}

    def go(node):
        if node in memo:
            return memo[node]
        if isinstance(node, Var):
            out = mapping.get(node.name, node)
        elif isinstance(node, (Num, NamedConst)):
            out = node
        else:
            out = _rebuild(node, [go(c) for c in node.children()])
        memo[node] = out
        return out

    return go(e)


def normalize(e):
    """Re-run the local rules bottom-up (idempotent on constructor-built trees)."""
    return substitute(e, {})


def partial(e, var):
    """Exact symbolic partial derivative with respect to the variable ``var``."""
    if isinstance(var, Var):
        var = var.name
    memo = {}

    def d(node):
        if node in memo:
            return memo[node]
        if isinstance(node, (Num, NamedConst)):
            out = ZERO
        elif isinstance(node, Var):
            out = ONE if node.name == var else ZERO
        elif isinstance(node, Add):
            out = add(d(node.left), d(node.right))
        elif isinstance(node, Sub):
            out = sub(d(node.left), d(node.right))
        elif isinstance(node, Mul):
            a, b = node.left, node.right
            out = add(mul(d(a), b), mul(a, d(b)))
        elif isinstance(node, Div):
            a, b = node.left, node.right
            da, db = d(a), d(b)
            if is_zero(db):
                out = div(da, b)
            else:
                out = div(sub(mul(da, b), mul(a, db)), power(b, 2))
        elif isinstance(node, Neg):
            out = neg(d(node.arg))
        elif isinstance(node, Pow):
            n = node.exponent
            out = mul(mul(Num(n), power(node.base, n - 1)), d(node.base))
        elif isinstance(node, Func):
            u = node.arg
            du = d(u)
            if is_zero(du):
                out = ZERO
            elif node.name == "sin":
                out = mul(cos(u), du)
            elif node.name == "cos":
                out = neg(mul(sin(u), du))
            elif node.name == "exp":
                out = mul(node, du)
            elif node.name == "sqrt":
                out = div(du, mul(Num(2), node))
            elif node.name == "pos":
                out = mul(step(u), du)
            elif node.name == "step":
                out = ZERO
            else:  # pragma: no cover - FUNCTIONS is closed
                raise InputError(node.name)
        else:  # pragma: no cover
            raise TypeError(node)
        memo[node] = out
        return out

    return d(e)


def gradient(e, chart):
    return tuple(partial(e, v) for v in chart.variables)


def count_nodes(e):
    return 1 + sum(count_nodes(c) for c in e.children())


# ---------------------------------------------------------------------------
# Numeric evaluation
# ---------------------------------------------------------------------------

_NAMESPACE = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "pos": lambda u: np.maximum(u, 0.0),
    "step": lambda u: np.heaviside(u, 1.0),
    "pi": math.pi,
    "e": math.e,
}


def _source(e, argnames, out, memo):
    """Emit straight-line code; returns the name holding ``e``'s value."""
    if e in memo:
        return memo[e]
    if isinstance(e, Num):
        ref = repr(float(e.value))
        memo[e] = ref
        return ref
    if isinstance(e, NamedConst):
        return e.name
    if isinstance(e, Var):
        return argnames[e.name]
    kids = [_source(c, argnames, out, memo) for c in e.children()]
    if isinstance(e, _Binary):
        rhs = f"{kids[0]} {e.symbol} {kids[1]}"
    elif isinstance(e, Neg):
        rhs = f"-{kids[0]}"
    elif isinstance(e, Pow):
        rhs = f"{kids[0]} ** {e.exponent}"
    else:
        rhs = f"{e.name}({kids[0]})"
    name = f"_t{len(out)}"
    out.append(f"    {name} = {rhs}")
    memo[e] = name
    return name


def compile_expr(e, variables):
    """Vectorized callable ``f(*coords)`` evaluating ``e``; cached per node."""
    variables = tuple(variables)
    if e._cache is None:
        e._cache = {}
    fn = e._cache.get(variables)
    if fn is not None:
        return fn
    argnames = {v: f"_a{i}" for i, v in enumerate(variables)}
    missing = free_vars(e) - set(variables)
    if missing:
        raise UnknownVariableError(f"variables {sorted(missing)} not available for evaluation")
    lines = []
    result = _source(e, argnames, lines, {})
    header = f"def _f({', '.join(argnames[v] for v in variables)}):"
    src = "\n".join([header, *lines, f"    return {result}"])
    namespace = dict(_NAMESPACE)
    exec(src, namespace)
    fn = namespace["_f"]
    e._cache[variables] = fn
    return fn


def evaluate_array(e, variables, coords):
    """Evaluate on broadcastable arrays; constant trees broadcast to the input shape."""
    coords = [np.asarray(c, dtype=float) for c in coords]
    fn = compile_expr(e, variables)
    with np.errstate(all="ignore"):
        value = fn(*coords)
    shape = np.broadcast_shapes(*(c.shape for c in coords)) if coords else ()
    return np.broadcast_to(np.asarray(value, dtype=float), shape)


def eval_grid(e, grid):
    """Values of ``e`` on every grid point; raises on poles or invalid values."""
    values = evaluate_array(e, grid.chart.variables, grid.points())
    bad = ~np.isfinite(values)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        where = {v: float(p[k]) for v, p in zip(grid.chart.variables, grid.points())}
        raise DomainError(f"{to_text(e)} is not finite at {where}")
    return values


def evaluate(e, point, chart):
    """IEEE double value of ``e`` at one point of ``chart``."""
    point = np.asarray(point, dtype=float)
    if point.shape != (chart.dim,):
        raise DomainError(f"point has {point.size} coordinates, chart {chart.name!r} has {chart.dim}")
    if not chart.contains(point):
        raise DomainError(f"point {point.tolist()} outside the domain of chart {chart.name!r}")
    if chart.on_singular_locus(point):
        raise DomainError(f"point {point.tolist()} lies on a singular locus of chart {chart.name!r}")
    check_chart(e, chart)
    value = float(evaluate_array(e, chart.variables, point))
    if not math.isfinite(value):
        raise DomainError(f"{to_text(e)} is not finite at {point.tolist()}")
    return value


def lambdify(e, chart):
    """Convenience vectorized callable taking one array per chart variable."""
    check_chart(e, chart)
    return lambda *coords: evaluate_array(e, chart.variables, coords)


__all__ = [
    "Chart",
    "Grid",
    "make_chart",
    "Expr",
    "Num",
    "NamedConst",
    "Var",
    "Add",
    "Sub",
    "Mul",
    "Div",
    "Neg",
    "Pow",
    "Func",
    "ZERO",
    "ONE",
    "const",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "power",
    "func",
    "sin",
    "cos",
    "exp",
    "sqrt",
    "pos",
    "step",
    "pi",
    "E",
    "to_text",
    "parse_expr",
    "Parser",
    "tokenize",
    "free_vars",
    "check_chart",
    "substitute",
    "normalize",
    "partial",
    "gradient",
    "compile_expr",
    "evaluate_array",
    "eval_grid",
    "evaluate",
    "lambdify",
]
