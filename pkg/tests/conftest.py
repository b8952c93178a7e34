import numpy as np
import pytest
from hypothesis import settings

from toptime import assets

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def model():
    return assets.default_model()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion for the run summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number, title, ok, detail, elapsed, budget):
        status = "PASS" if ok and elapsed < budget else "FAIL"
        line = f"[{status}] criterion {number:>2}: {title}: {detail} ({elapsed:.2f} s, budget {budget:g} s)"
        lines.append((number, line))
        print(line)
        return status == "PASS"

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
