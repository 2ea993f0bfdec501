import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from kakeya_lab.maximal import DiscretizationWarning

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def quiet_basis():
    """Silence the narrow-rectangle warning for deliberately coarse test bases."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DiscretizationWarning)
        yield


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line for an acceptance criterion and print it."""
    lines = request.config.stash[_ACCEPTANCE]

    def record(label, ok, detail):
        line = f"criterion {label}: {'PASS' if ok else 'FAIL'} ({detail})"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
