import time

import pytest

import _corpus

CRITERIA: dict[int, str] = {}
_START = time.perf_counter()


@pytest.fixture(scope="session")
def example_kernel():
    return _corpus.kernel("example")


@pytest.fixture(scope="session")
def kernels():
    return {name: _corpus.kernel(name) for name in _corpus.COEFFICIENT_SETS}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[n])
    elapsed = time.perf_counter() - _START
    verdict = "PASS" if elapsed < 60 else "FAIL"
    terminalreporter.write_line(f"wall-clock budget: {verdict} - session took {elapsed:.1f} s (limit 60 s)")
