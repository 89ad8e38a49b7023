import numpy as np
import pytest

from rqframe.kernels import KernelConfig, build_filterbank


@pytest.fixture(scope="session")
def bank16():
    return build_filterbank(KernelConfig(scales=2, riesz_order=1), 16, 16)


@pytest.fixture(scope="session")
def bank32():
    return build_filterbank(KernelConfig(), 32, 32)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion."""

    def _report(n: int, ok: bool, detail: str) -> bool:
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
