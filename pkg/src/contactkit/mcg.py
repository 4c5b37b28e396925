"""Dehn-twist words on a genus-g surface with one boundary component.

Words compose like maps: the leftmost letter acts last, so ``phi o D_gamma``
appends ``gamma`` on the right, and the homological representation of a word
is the left-to-right product of its twist matrices. A twist acts on
``H_1`` by the transvection ``x -> x + <x, c> c`` with
``<a_k, b_k> = +1`` in the basis ``a_1, b_1, ..., a_g, b_g``.

Curve names: ``c`` (boundary parallel), ``g1 .. g{2g}`` (the standard chain),
``s1, s2, ...`` (separating), ``t1 .. t{g}`` (``t_k`` carries the class
``a_k``; stabilization adds ``t_{g+1}``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, ParseError, PreconditionError

FRAMING_RULE = "page framing - 1"


# ---------------------------------------------------------------------------
# Curves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Curve:
    name: str
    genus: int
    hclass: tuple
    separating: bool

    def __post_init__(self):
        if len(self.hclass) != 2 * self.genus:
            raise InputError(f"curve {self.name}: class length {len(self.hclass)} != 2g = {2 * self.genus}")
        if self.separating != (not any(self.hclass)):
            raise InputError(f"curve {self.name}: separating iff the homology class is zero")

    @property
    def kind(self):
        return re.match(r"[a-z]+", self.name).group(0)

    @property
    def index(self):
        m = re.search(r"(\d+)$", self.name)
        return int(m.group(1)) if m else 0

    def lifted(self, genus):
        """The same curve on a surface with more genus (class padded with zeros)."""
        if genus < self.genus:
            raise InputError("cannot lower the genus of a curve")
        return Curve(self.name, genus, self.hclass + (0,) * (2 * (genus - self.genus)), self.separating)


def _unit(genus, k):
    v = [0] * (2 * genus)
    v[k] = 1
    return v


def chain_class(genus, i):
    """Class of the chain curve ``gamma_i``: ``a_1, b_1, a_2 - a_1, b_2, a_3 - a_2, ...``."""
    if not 1 <= i <= 2 * genus:
        raise InputError(f"chain curve g{i} needs 1 <= i <= {2 * genus}")
    k = (i + 1) // 2  # handle number
    if i % 2 == 0:
        return tuple(_unit(genus, 2 * k - 1))
    v = _unit(genus, 2 * k - 2)
    if k > 1:
        v[2 * k - 4] = -1
    return tuple(v)


def curve(name, genus):
    """Look up a named curve in genus ``genus``."""
    if genus < 0:
        raise InputError("genus must be non-negative")
    zero = (0,) * (2 * genus)
    if name == "c":
        return Curve("c", genus, zero, True)
    m = re.fullmatch(r"([gst])(\d+)", name)
    if not m:
        raise InputError(f"unknown curve name {name!r} (use c, g<i>, s<i>, t<k>)")
    kind, i = m.group(1), int(m.group(2))
    if i < 1:
        raise InputError(f"curve index must be positive in {name!r}")
    if kind == "g":
        return Curve(name, genus, chain_class(genus, i), False)
    if kind == "s":
        return Curve(name, genus, zero, True)
    if i > genus:
        raise InputError(f"stabilization curve {name} needs genus >= {i}")
    return Curve(name, genus, tuple(_unit(genus, 2 * i - 2)), False)


def disjoint(c1, c2):
    """Declared disjointness: boundary twist is central, chain curves two apart, stabilization curves."""
    if c1.name == c2.name:
        return True
    if c1.name == "c" or c2.name == "c":
        return True
    if c1.kind == "g" and c2.kind == "g":
        return abs(c1.index - c2.index) >= 2
    if c1.kind == "t" and c2.kind == "t":
        return True
    return False


# ---------------------------------------------------------------------------
# Integer symplectic matrices
# ---------------------------------------------------------------------------


def symplectic_form(genus):
    J = np.zeros((2 * genus, 2 * genus), dtype=object)
    J[:] = 0
    for k in range(genus):
        J[2 * k, 2 * k + 1] = 1
        J[2 * k + 1, 2 * k] = -1
    return J


def _identity(n):
    M = np.zeros((n, n), dtype=object)
    M[:] = 0
    for i in range(n):
        M[i, i] = 1
    return M


def int_det(M):
    """Exact determinant of an integer matrix (fraction-free Bareiss elimination)."""
    A = [[int(x) for x in row] for row in np.asarray(M, dtype=object)]
    n = len(A)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if A[i][k] != 0), None)
            if swap is None:
                return 0
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


@dataclass(frozen=True)
class HomRep:
    matrix: tuple  # rows of Python ints
    genus: int

    @classmethod
    def from_array(cls, M, genus):
        return cls(tuple(tuple(int(x) for x in row) for row in np.asarray(M, dtype=object)), genus)

    @classmethod
    def identity(cls, genus):
        return cls.from_array(_identity(2 * genus), genus)

    def array(self):
        A = np.zeros((2 * self.genus, 2 * self.genus), dtype=object)
        for i, row in enumerate(self.matrix):
            for j, x in enumerate(row):
                A[i, j] = x
        return A

    def __matmul__(self, other):
        if other.genus != self.genus:
            raise InputError("genus mismatch in matrix product")
        return HomRep.from_array(self.array().dot(other.array()), self.genus)

    def __pow__(self, n):
        out = HomRep.identity(self.genus)
        for _ in range(n):
            out = out @ self
        return out

    def is_identity(self):
        return self == HomRep.identity(self.genus)

    def is_symplectic(self):
        M, J = self.array(), symplectic_form(self.genus)
        return bool(np.all(M.T.dot(J).dot(M) == J))

    def order(self, limit=1000):
        """Smallest ``n >= 1`` with ``M^n = I``, or 0 if none up to ``limit``."""
        P = self
        for n in range(1, limit + 1):
            if P.is_identity():
                return n
            P = P @ self
        return 0

    def det_minus_identity(self):
        return abs(int_det(self.array() - _identity(2 * self.genus)))

    def tolist(self):
        return [list(r) for r in self.matrix]


def twist_matrix(c):
    """Transvection ``x -> x + <x, c> c``, i.e. ``I - c c^T J``."""
    n = 2 * c.genus
    v = np.array(c.hclass, dtype=object).reshape(n, 1)
    if n == 0:
        return HomRep.identity(0)
    M = _identity(n) - v.dot(v.T).dot(symplectic_form(c.genus))
    return HomRep.from_array(M, c.genus)


# ---------------------------------------------------------------------------
# Words
# ---------------------------------------------------------------------------


def _key(c):
    order = {"c": 0, "g": 1, "s": 2, "t": 3}
    return (order.get(c.kind, 9), c.index, c.name)


@dataclass(frozen=True)
class TwistWord:
    """``letters[0] o letters[1] o ...``; each letter is ``(Curve, +1 | -1)``."""

    letters: tuple
    genus: int

    def __post_init__(self):
        letters = tuple((c, int(e)) for c, e in self.letters)
        for c, e in letters:
            if e not in (1, -1):
                raise InputError("twist exponents are +1 or -1 (repeat letters for powers)")
            if c.genus != self.genus:
                raise InputError(f"curve {c.name} has genus {c.genus}, word has genus {self.genus}")
        object.__setattr__(self, "letters", letters)

    @classmethod
    def empty(cls, genus):
        return cls((), genus)

    @classmethod
    def of(cls, genus, *items):
        """``TwistWord.of(1, ("c", 2), ("s1", -1))``."""
        out = []
        for name, power in items:
            c = curve(name, genus)
            out.extend([(c, 1 if power > 0 else -1)] * abs(power))
        return cls(tuple(out), genus)

    def __len__(self):
        return len(self.letters)

    def __mul__(self, other):
        """Composition ``self o other``."""
        if other.genus != self.genus:
            raise InputError("genus mismatch in word product")
        return TwistWord(self.letters + other.letters, self.genus)

    def __pow__(self, n):
        if n < 0:
            return self.inverse() ** (-n)
        return TwistWord(self.letters * n, self.genus)

    def inverse(self):
        return TwistWord(tuple((c, -e) for c, e in reversed(self.letters)), self.genus)

    def lifted(self, genus):
        return TwistWord(tuple((c.lifted(genus), e) for c, e in self.letters), genus)

    def to_text(self):
        if not self.letters:
            return "1"
        parts = []
        k = 0
        while k < len(self.letters):
            c, e = self.letters[k]
            n = 1
            while k + n < len(self.letters) and self.letters[k + n] == (c, e):
                n += 1
            p = n * e
            parts.append(c.name if p == 1 else f"{c.name}^{p}")
            k += n
        return "*".join(parts)

    def __str__(self):
        return self.to_text()

    def exponent_sum(self, name):
        return sum(e for c, e in self.letters if c.name == name)


_FACTOR = re.compile(r"\s*([A-Za-z]\w*)\s*(?:\^\s*([+-]?\d+))?\s*")


def parse_word(text, genus):
    """Parse ``"c^2 * s1^-1"``; ``"1"`` or an empty string is the identity."""
    src = text.strip()
    if src in ("", "1"):
        return TwistWord.empty(genus)
    items = []
    pos = 0
    for k, chunk in enumerate(text.split("*")):
        m = _FACTOR.fullmatch(chunk)
        if not m:
            raise ParseError("malformed factor (expected name or name^int)", text, pos)
        name, power = m.group(1), int(m.group(2)) if m.group(2) else 1
        try:
            curve(name, genus)
        except InputError as err:
            raise ParseError(str(err), text, pos + chunk.find(name)) from None
        if power == 0:
            pos += len(chunk) + 1
            continue
        items.append((name, power))
        pos += len(chunk) + 1
    return TwistWord.of(genus, *items)


def hom_rep(w):
    """Left-to-right product of twist matrices (the leftmost letter acts last)."""
    M = HomRep.identity(w.genus).array()
    cache = {}
    for c, e in w.letters:
        key = (c, e)
        if key not in cache:
            T = twist_matrix(c)
            cache[key] = T.array() if e > 0 else _inverse_transvection(c).array()
        M = M.dot(cache[key])
    return HomRep.from_array(M, w.genus)


def _inverse_transvection(c):
    n = 2 * c.genus
    v = np.array(c.hclass, dtype=object).reshape(n, 1)
    if n == 0:
        return HomRep.identity(0)
    return HomRep.from_array(_identity(n) + v.dot(v.T).dot(symplectic_form(c.genus)), c.genus)


def word_reduce(w):
    """Free cancellation across commuting letters, then the lexicographic normal form.

    A letter ``x^e`` cancels the nearest earlier ``x^-e`` when every letter in
    between commutes with ``x``. The survivors are then listed by repeatedly
    taking the smallest letter that commutes with everything before it, so
    the boundary twists collect into a leading ``c^k``.
    """
    stack = []
    for c, e in w.letters:
        cancelled = False
        for k in range(len(stack) - 1, -1, -1):
            d, f = stack[k]
            if d == c and f == -e:
                del stack[k]
                cancelled = True
                break
            if not disjoint(c, d):
                break
        if not cancelled:
            stack.append((c, e))
    out = []
    rest = list(stack)
    while rest:
        best = None
        for k, (c, e) in enumerate(rest):
            if all(disjoint(c, d) for d, _ in rest[:k]):
                key = (_key(c), -e)
                if best is None or key < best[0]:
                    best = (key, k)
        out.append(rest.pop(best[1]))
    return TwistWord(tuple(out), w.genus)


def words_equal(u, v):
    """Equality after reduction (sound, not complete)."""
    return word_reduce(u).letters == word_reduce(v).letters


def chain_word(genus):
    return TwistWord.of(genus, *[(f"g{i}", 1) for i in range(1, 2 * genus + 1)])


def chain_relation_word(genus):
    """``(D_g1 o ... o D_g{2g})^(4g+2)``, equal to ``D_c`` in the mapping class group."""
    if genus < 1:
        raise InputError("the chain relation needs genus >= 1")
    return chain_word(genus) ** (4 * genus + 2)


# ---------------------------------------------------------------------------
# Open books and handles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OpenBook:
    genus: int
    monodromy: TwistWord
    boundary_components: int = 1

    def __post_init__(self):
        if self.monodromy.genus != self.genus:
            raise InputError("monodromy genus must match the page genus")
        if self.boundary_components != 1:
            raise InputError("only pages with one boundary component are supported")

    @classmethod
    def parse(cls, genus, text):
        return cls(genus, parse_word(text, genus))


@dataclass
class HandleRecord:
    stage: str
    curve: str
    framing: str
    before: str
    after: str

    def to_dict(self):
        return {"stage": self.stage, "curve": self.curve, "framing": self.framing, "before": self.before,
                "after": self.after}


@dataclass
class CapRecord:
    base_genus: object
    euler_number: int = 1
    concave: bool = True
    note: str = ""

    def to_dict(self):
        return {"kind": "D2-bundle", "base_genus": self.base_genus, "euler_number": self.euler_number,
                "concave": self.concave, "note": self.note}


@dataclass
class HandleSequence:
    records: list = field(default_factory=list)
    cap: CapRecord = None

    def append(self, record):
        if record.framing != FRAMING_RULE:
            raise InputError("every handle is attached with framing one less than the page framing")
        self.records.append(record)

    def check(self, genus):
        """Each record's word equals the previous word followed by a twist on its curve."""
        for r in self.records:
            if r.stage == "4":
                continue
            before = parse_word(r.before, genus)
            expect = before * TwistWord.of(genus, (r.curve, 1))
            if not words_equal(expect, parse_word(r.after, genus)):
                return False
        return all(r.framing == FRAMING_RULE for r in self.records)

    def count(self, stage=None):
        return sum(1 for r in self.records if stage is None or r.stage == stage)

    def to_dict(self):
        return {"records": [r.to_dict() for r in self.records], "cap": self.cap.to_dict() if self.cap else None}


def positive_stabilize(ob):
    """Add a 1-handle to the page and a right twist over it: genus ``g+1``, ``phi o D_t{g+1}``."""
    g = ob.genus + 1
    word = ob.monodromy.lifted(g) * TwistWord.of(g, (f"t{g}", 1))
    return OpenBook(g, word)


def legendrian_surgery(ob, c, stage="surgery", reduce=True):
    """Legendrian surgery on a curve in a page: monodromy becomes ``phi o D_c``."""
    if isinstance(c, str):
        c = curve(c, ob.genus)
    if c.genus != ob.genus:
        raise InputError("surgery curve lives on a different page")
    new = ob.monodromy * TwistWord(((c, 1),), ob.genus)
    if reduce:
        new = word_reduce(new)
    rec = HandleRecord(stage, c.name, FRAMING_RULE, ob.monodromy.to_text(), new.to_text())
    return OpenBook(ob.genus, new), rec


def homology_sphere_check(ob):
    """``|det(psi - I)|``: 1 means a homology sphere, 0 means positive first Betti number."""
    return hom_rep(ob.monodromy).det_minus_identity()


# ---------------------------------------------------------------------------
# Cap pipeline
# ---------------------------------------------------------------------------


@dataclass
class Stage:
    stage: str
    handles: int
    word: TwistWord
    det: int
    homology_sphere: bool
    note: str = ""

    def to_dict(self):
        return {"stage": self.stage, "handles": self.handles, "word": self.word.to_text(), "det": self.det,
                "homology_sphere": self.homology_sphere, "note": self.note}


@dataclass
class CapPipeline:
    genus: int
    m: int
    k: int
    stages: list
    sequence: HandleSequence
    stage3_computed: int
    stage3_stated: int  # the commonly quoted count 8g^2 + 3g, kept for comparison
    stage4_certified: bool

    def stage(self, label):
        return next(s for s in self.stages if s.stage == label)

    def table(self):
        rows = [f"{'stage':<8}{'handles':>8}  {'|det(psi-I)|':>12}  word"]
        for s in self.stages:
            rows.append(f"{s.stage:<8}{s.handles:>8}  {s.det:>12}  {s.word.to_text()}")
        cap = self.sequence.cap
        base = "unspecified" if cap.base_genus is None else cap.base_genus
        rows.append(f"cap: D2-bundle over closed surface (genus {base}), Euler number {cap.euler_number}, "
                    f"{'concave' if cap.concave else 'convex'}")
        return "\n".join(rows)

    def to_dict(self):
        return {
            "genus": self.genus,
            "m": self.m,
            "k": self.k,
            "stages": [s.to_dict() for s in self.stages],
            "stage3_handles_computed": self.stage3_computed,
            "stage3_handles_stated": self.stage3_stated,
            "stage4_certified_homologically": self.stage4_certified,
            "handles": self.sequence.to_dict(),
        }


def factored_form(w):
    """``(m, [negative curves])`` for ``w = c^m o D_1^-1 o ... o D_n^-1``, else ``None``."""
    r = word_reduce(w)
    m = r.exponent_sum("c")
    rest = [(c, e) for c, e in r.letters if c.name != "c"]
    if any(e != -1 for _, e in rest):
        return None
    return m, [c for c, _ in rest]


def cap_pipeline(ob):
    """Four stages of 2-handle attachments ending in ``D_c'`` and an Euler-number-1 cap.

    1. Legendrian surgery on each negatively twisted curve (rightmost first)
       leaves ``c^m``.
    2. Surgery on the chain ``g1 .. g{2g}``: ``c^m o chain``.
    3. ``(4g+1) 2g`` further chain handles complete ``chain^(4g+2) = c``, so
       the word becomes ``c^(m+1)``.
    4. Stabilization and surgeries to ``D_c'`` on a larger page; recorded
       symbolically and certified on homology only.
    """
    g = ob.genus
    if g < 1:
        raise InputError("the cap pipeline needs genus >= 1")
    ff = factored_form(ob.monodromy)
    if ff is None:
        raise PreconditionError("monodromy is not of the form c^m o D_1^-1 o ... o D_n^-1")
    m, negatives = ff
    seq = HandleSequence()
    stages = []
    cur = OpenBook(g, word_reduce(ob.monodromy))
    stages.append(Stage("input", 0, cur.monodromy, homology_sphere_check(cur), False))

    for c in reversed(negatives):
        cur, rec = legendrian_surgery(cur, c, "1")
        seq.append(rec)
    target1 = TwistWord.of(g, ("c", m)) if m else TwistWord.empty(g)
    if cur.monodromy.letters != word_reduce(target1).letters:
        raise PreconditionError(f"stage 1 did not cancel literally: {cur.monodromy.to_text()}")
    stages.append(Stage("1", len(negatives), cur.monodromy, homology_sphere_check(cur), False))

    for i in range(1, 2 * g + 1):
        cur, rec = legendrian_surgery(cur, f"g{i}", "2", reduce=False)
        seq.append(rec)
    d2 = homology_sphere_check(cur)
    stages.append(Stage("2", 2 * g, cur.monodromy, d2, d2 == 1))

    computed = (4 * g + 1) * 2 * g
    stated = 8 * g * g + 3 * g
    for _ in range(4 * g + 1):
        for i in range(1, 2 * g + 1):
            cur, rec = legendrian_surgery(cur, f"g{i}", "3", reduce=False)
            seq.append(rec)
    full = word_reduce(TwistWord.of(g, ("c", m))) * chain_relation_word(g)
    if cur.monodromy.letters != full.letters:
        raise PreconditionError("stage 3 word is not c^m followed by the chain relation word")
    certified = hom_rep(cur.monodromy) == hom_rep(TwistWord.of(g, ("c", m + 1)))
    k = m + 1
    w3 = word_reduce(TwistWord.of(g, ("c", k)))
    stages.append(Stage("3", computed, w3, homology_sphere_check(OpenBook(g, w3)), False,
                        f"chain relation applied; stated count {stated}, computed {computed}; "
                        f"hom_rep certified {certified}"))
    cur = OpenBook(g, w3)

    c_prime = Curve("c'", g, (0,) * (2 * g), True)
    w4 = TwistWord(((c_prime, 1),), g)
    stage4_ok = hom_rep(cur.monodromy).is_identity() and twist_matrix(c_prime).is_identity()
    seq.records.append(HandleRecord("4", "stabilize+surgery", FRAMING_RULE, w3.to_text(), "c'"))
    stages.append(Stage("4", 0, w4, twist_matrix(c_prime).det_minus_identity(), False,
                        "recorded symbolically; the stabilized page and handle count are not reconstructed"))
    seq.cap = CapRecord(base_genus=None, euler_number=1, concave=True,
                        note="D2-bundle over the closed surface capping the final page")
    return CapPipeline(g, m, k, stages, seq, computed, stated, stage4_ok)


__all__ = [
    "FRAMING_RULE",
    "Curve",
    "chain_class",
    "curve",
    "disjoint",
    "symplectic_form",
    "int_det",
    "HomRep",
    "twist_matrix",
    "TwistWord",
    "parse_word",
    "hom_rep",
    "word_reduce",
    "words_equal",
    "chain_word",
    "chain_relation_word",
    "OpenBook",
    "HandleRecord",
    "CapRecord",
    "HandleSequence",
    "positive_stabilize",
    "legendrian_surgery",
    "homology_sphere_check",
    "Stage",
    "CapPipeline",
    "factored_form",
    "cap_pipeline",
]
