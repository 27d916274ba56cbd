import pytest

from nonlocal_epidemic import GrowthLaw, InitialData, Kernel, ModelParams


@pytest.fixture
def kernel():
    return Kernel("compact_quadratic", 1.0)


@pytest.fixture
def hill2():
    return GrowthLaw("hill", 2.0)


@pytest.fixture
def params():
    return ModelParams(a=1.0, b=1.0, c=1.0, d=2.0, mu=1.0, h0=1.0)


@pytest.fixture
def bump():
    return InitialData("bump", 0.5, 0.5)


_ACCEPTANCE = pytest.StashKey[dict]()
N_CRITERIA = 12


@pytest.fixture(scope="session")
def acceptance_log(request):
    """criterion number -> (passed, detail); printed at the end of the session."""
    return request.config.stash.setdefault(_ACCEPTANCE, {})


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_ACCEPTANCE, None)
    if log is None:
        return
    terminalreporter.section("acceptance criteria")
    for i in range(1, N_CRITERIA + 1):
        passed, detail = log.get(i, (False, "not evaluated (error before the check)"))
        terminalreporter.write_line(f"criterion {i:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
