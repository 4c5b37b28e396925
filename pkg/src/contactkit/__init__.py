"""Contact structures, foliations and open books on coordinate charts."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ChartMismatchError,
    ContactKitError,
    DegreeError,
    DomainError,
    InputError,
    ParseError,
    PreconditionError,
    UnknownVariableError,
    VerificationError,
)
from .expr import Chart, Grid, make_chart, parse_expr  # noqa: E402
from .forms import KForm, VectorFieldChart, exterior_d, interior_product, parse_form, pullback, wedge  # noqa: E402
from .planefields import PlaneFieldChart, classify, example  # noqa: E402
from .surfdyn import characteristic_foliation, classify_holonomy, holonomy_return_map  # noqa: E402
from .mcg import OpenBook, TwistWord, cap_pipeline, hom_rep, parse_word, word_reduce  # noqa: E402

__all__ = [
    "__version__",
    "ChartMismatchError",
    "ContactKitError",
    "DegreeError",
    "DomainError",
    "InputError",
    "ParseError",
    "PreconditionError",
    "UnknownVariableError",
    "VerificationError",
    "Chart",
    "Grid",
    "make_chart",
    "parse_expr",
    "KForm",
    "VectorFieldChart",
    "exterior_d",
    "interior_product",
    "parse_form",
    "pullback",
    "wedge",
    "PlaneFieldChart",
    "classify",
    "example",
    "characteristic_foliation",
    "classify_holonomy",
    "holonomy_return_map",
    "OpenBook",
    "TwistWord",
    "cap_pipeline",
    "hom_rep",
    "parse_word",
    "word_reduce",
]
