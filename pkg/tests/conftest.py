import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_VERDICTS = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""
    def record(number, ok, detail):
        _VERDICTS.append(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
        print(_VERDICTS[-1])
        assert ok, detail
    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
