import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_COUNT = 11


@pytest.fixture
def acceptance(request):
    """``acceptance(no, title, ok, detail)`` records one criterion verdict."""
    lines = request.config.__dict__.setdefault("_acceptance", {})

    def record(no, title, ok, detail=""):
        lines[no] = f"[{'PASS' if ok else 'FAIL'}] criterion {no:2d}: {title}  ({detail})"
        print(lines[no])
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.__dict__.get("_acceptance")
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for no in range(1, ACCEPTANCE_COUNT + 1):
        terminalreporter.write_line(lines.get(no, f"[FAIL] criterion {no:2d}: no result (not run or errored)"))
