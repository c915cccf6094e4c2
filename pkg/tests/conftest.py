import math

import numpy as np
import pytest

from npsa import _backend, _fallback, core, estimators

TWO_PI = 2 * math.pi

BACKENDS = ["python"] + (["cython"] if _backend.COMPILED else [])

# (criterion, passed, detail) lines collected by test_acceptance
ACCEPTANCE = []


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run the test once per kernel implementation."""
    mod = _backend.kernels if request.param == "cython" else _fallback
    monkeypatch.setattr(core, "kernels", mod)
    monkeypatch.setattr(estimators, "kernels", mod)
    return mod


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section(f"acceptance criteria (kernel backend: {_backend.BACKEND})")
    for name, passed, detail in ACCEPTANCE:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
