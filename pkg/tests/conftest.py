import warnings
from fractions import Fraction

import pytest

from permshift import ConstructionParams, Ordering, Variant, build
from permshift.construction import Construction, DegenerateWarning

T0 = ConstructionParams(Variant.MARKER, Fraction(1, 2), 6, 4)
P25 = ConstructionParams(Variant.MARKER, Fraction(1, 2), 25, 25, max_level=4)


@pytest.fixture(scope="session")
def t0() -> Construction:
    return build(T0)


@pytest.fixture(scope="session")
def c25() -> Construction:
    return build(P25)


@pytest.fixture(scope="session")
def w25(c25) -> str:
    return c25.limit_prefix(1_000_000)


@pytest.fixture(scope="session")
def c25_egs() -> Construction:
    return build(ConstructionParams(Variant.MARKER, Fraction(1, 2), 25, 25, Ordering.EGS_ORDERED, max_level=4))


@pytest.fixture(scope="session")
def c25_spacer() -> Construction:
    return build(ConstructionParams(Variant.SPACER, Fraction(1, 2), 25, 25, max_level=4))


def quiet(params, **kw) -> Construction:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateWarning)
        return Construction(params, **kw)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.summary_lines():
        terminalreporter.write_line(line)
