import numpy as np
import pytest

from dipolelets.bands import AngularConfig, RadialConfig, build_bandset
from dipolelets.simulate import make_phantom
from dipolelets.volume import GridSpec, make_freq_grid


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def grid32():
    return GridSpec((32, 32, 32))


@pytest.fixture(scope="session")
def bands32(grid32):
    return build_bandset(make_freq_grid(grid32), RadialConfig(J=3), AngularConfig())


@pytest.fixture(scope="session")
def head32(grid32):
    return make_phantom(grid32, "default-head")


@pytest.fixture(scope="session")
def bands16():
    return build_bandset(make_freq_grid(GridSpec((16, 16, 16))), RadialConfig(J=1), AngularConfig())


# --------------------------------------------------------------------------
# acceptance report: one line per criterion in the terminal summary

_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Recorder ``criterion(number, title, ok, detail)``; asserts ``ok``."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])
    seen = []

    def record(number, title, ok, detail=""):
        seen.append(number)
        lines.append((number, title, bool(ok), detail))
        assert ok, f"criterion {number} ({title}) failed: {detail}"

    yield record
    if not seen:
        lines.append((request.node.name, "did not complete", False, "raised before recording"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(lines, key=lambda l: str(l[0]).zfill(3)):
        terminalreporter.write_line(f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
