import numpy as np
import pytest
from hypothesis import settings

from valueregion.conformal import strip_map
from valueregion.region import RegionSpec

settings.register_profile("repo", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("repo")

LN2, LN4, LN6 = np.log(2.0), np.log(4.0), np.log(6.0)
Z0S = (0.5j, 0j)
TS = (LN2, LN4, LN6)

# acceptance lines, printed once at the end of the session
ACCEPTANCE_LINES = {}


@pytest.fixture(params=[(z, T) for z in Z0S for T in TS],
                ids=lambda p: f"z0={p[0]}-T={p[1]:.4f}")
def figure_spec(request):
    z, T = request.param
    return RegionSpec.from_disk(z, T)


@pytest.fixture
def spec_half_i():
    return RegionSpec(strip_map(0.5j), LN4)


@pytest.fixture
def spec_zero():
    return RegionSpec(0j, LN4)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
