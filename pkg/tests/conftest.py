import os

import numpy as np
import pytest
from hypothesis import settings

from sdrsvm import _backend

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
IONOSPHERE = os.path.join(DATA_DIR, "ionosphere.csv")


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: end-to-end acceptance criteria")


@pytest.fixture(params=_backend.available())
def core(request):
    """Each available backend in turn."""
    return _backend.get(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one PASS/FAIL line per acceptance criterion, printed in the terminal summary
CRITERIA = {}
N_CRITERIA = 10


@pytest.fixture
def criterion():
    def record(number, ok, detail):
        CRITERIA[number] = (bool(ok), detail)
        print(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    acceptance_seen = any(
        "test_acceptance" in getattr(rep, "nodeid", "")
        for key in ("passed", "failed", "error")
        for rep in terminalreporter.stats.get(key, ())
    )
    if not acceptance_seen:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, N_CRITERIA + 1):
        if n in CRITERIA:
            ok, detail = CRITERIA[n]
            terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
        else:
            terminalreporter.write_line(f"[----] criterion {n}: not run in this session")
