import os
import sys
from fractions import Fraction

from hypothesis import strategies as st

from weylsos.scalar import Scalar
from weylsos.weyl import LADDER1, PM1, Monomial, WeylElement

HERE = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.dirname(HERE)
PROBLEMS = os.path.join(ROOT, "problems")
GOLDEN = os.path.join(HERE, "golden")
SHIM = f"{sys.executable} {os.path.join(HERE, 'sdpa_shim.py')} {{input}} {{output}}"

small_fraction = st.fractions(min_value=-5, max_value=5, max_denominator=4)
small_int = st.integers(-3, 3).map(Fraction)


@st.composite
def scalars(draw, coord=small_fraction):
    return Scalar(draw(coord), draw(coord), draw(coord), draw(coord))


@st.composite
def nonzero_scalars(draw):
    s = draw(scalars())
    if s.is_zero():
        s = Scalar(1)
    return s


@st.composite
def elements(draw, max_deg=2, presentation=PM1, coef=None):
    """Random element with total degree <= max_deg."""
    coef = coef or scalars(small_int)
    mons = [(a, b) for a in range(max_deg + 1) for b in range(max_deg + 1 - a)]
    chosen = draw(st.lists(st.sampled_from(mons), min_size=1, max_size=4, unique=True))
    terms = {Monomial((a,), (b,)): draw(coef) for a, b in chosen}
    u = WeylElement(presentation, terms)
    return u if not u.is_zero() else WeylElement.constant(1, presentation)


def problem(name):
    return os.path.join(PROBLEMS, name)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
