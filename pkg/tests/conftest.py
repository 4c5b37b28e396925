import numpy as np
import pytest
from hypothesis import strategies as st

from contactkit import expr as ex
from contactkit.forms import KForm

CHART3 = ex.make_chart("R3", ("x", "y", "z"), [(-1.0, 1.0)] * 3)
CHART4 = ex.make_chart("R4", ("t", "x", "y", "z"), [(-1.0, 1.0)] * 4)


def expressions(variables=("x", "y", "z"), max_leaves=8):
    """Smooth, everywhere-defined expressions built from the grammar."""
    leaves = st.one_of(
        st.sampled_from(variables).map(ex.Var),
        st.integers(-3, 3).map(ex.const),
        st.fractions(min_value=-2, max_value=2, max_denominator=5).map(ex.const),
    )

    def grow(children):
        return st.one_of(
            st.tuples(children, children).map(lambda p: p[0] + p[1]),
            st.tuples(children, children).map(lambda p: p[0] - p[1]),
            st.tuples(children, children).map(lambda p: p[0] * p[1]),
            st.tuples(children, st.integers(2, 3)).map(lambda p: p[0] ** p[1]),
            children.map(ex.sin),
            children.map(ex.cos),
            children.map(lambda e: ex.exp(ex.sin(e))),
            children.map(lambda e: e / (2 + ex.cos(e))),
        )

    return st.recursive(leaves, grow, max_leaves=max_leaves)


def forms(chart, degree, max_leaves=5):
    from itertools import combinations

    idx = list(combinations(range(chart.dim), degree))
    return st.lists(expressions(chart.variables, max_leaves), min_size=len(idx), max_size=len(idx)).map(
        lambda cs: KForm(chart, degree, dict(zip(idx, cs)))
    )


def sample_points(chart, n=7, seed=1):
    rng = np.random.default_rng(seed)
    return tuple(rng.uniform(lo, hi, n) for lo, hi in chart.domain)


def form_max(form, coords):
    vals = form.values(coords)
    return max((float(np.max(np.abs(v))) for v in vals.values()), default=0.0)


@pytest.fixture
def chart3():
    return CHART3


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
