import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def verdict():
    """Record one acceptance line; call with (label, passed, detail)."""
    def record(label: str, passed: bool, detail: str = ""):
        _ACCEPTANCE.append((label, bool(passed), detail))
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}")
