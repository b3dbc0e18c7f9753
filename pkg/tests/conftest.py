import os
import time
from contextlib import contextmanager

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=30,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


_CRITERIA = {}


@pytest.fixture
def criterion():
    """Context manager recording one PASS/FAIL line per acceptance criterion."""

    @contextmanager
    def record(number: int, title: str):
        notes = []
        t0 = time.perf_counter()
        try:
            yield notes
        except BaseException as exc:
            reason = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
            _emit(number, "FAIL", title, notes + [reason], time.perf_counter() - t0)
            raise
        _emit(number, "PASS", title, notes, time.perf_counter() - t0)

    return record


def _emit(number, status, title, notes, elapsed):
    line = f"{status} criterion {number:2d} {title} [{elapsed:.1f}s]"
    if notes:
        line += ": " + "; ".join(notes)
    _CRITERIA[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[k])
