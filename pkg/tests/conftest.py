import warnings

import numpy as np
import pytest

from levylab import (BernsteinSpec, ExplicitSymbol, GridUnderresolvedWarning, Layered, Polar,
                     SpectralMeasure, Stable, SubordinateBM, Tempered, Truncated)

ACCEPTANCE_LINES = []


def sym1(radial, weight=1.0):
    """Symmetric d=1 polar model with atoms of ``weight`` at +-1."""
    return Polar(SpectralMeasure.symmetric(1, weight), radial)


@pytest.fixture(autouse=True)
def _quiet_alias_warnings():
    # dealiasing estimates above 1e-4 are reported, not failures
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GridUnderresolvedWarning)
        yield


@pytest.fixture
def cauchy():
    """Re Phi = pi |xi| (atoms of weight 1)."""
    return sym1(Stable(1.0))


@pytest.fixture
def unit_cauchy():
    return ExplicitSymbol("power", alpha=1.0)


@pytest.fixture
def heat():
    return ExplicitSymbol("power", alpha=2.0)


@pytest.fixture
def layered():
    return sym1(Layered(0.5, 3.0, 1.0))


@pytest.fixture
def truncated():
    return sym1(Truncated(0.5, 1.0))


@pytest.fixture
def tempered():
    return sym1(Tempered(0.5, 1.0))


@pytest.fixture
def sbm():
    return SubordinateBM(BernsteinSpec(1.0, 0.5))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
