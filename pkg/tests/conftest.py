import os
import sys

import pytest
from hypothesis import settings

from capsapprox.backend import HAVE_NUMBA

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=200, deadline=None)
settings.load_profile("default")

BACKENDS = ["numpy"] + (["numba"] if HAVE_NUMBA else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


# -- acceptance summary ---------------------------------------------------------

ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance criterion and assert it."""

    def check(name: str, ok: bool, detail: str) -> None:
        ACCEPTANCE.append((name, bool(ok), detail))
        assert ok, f"{name}: {detail}"

    return check


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
