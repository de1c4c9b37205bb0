from __future__ import annotations

import pytest

from domainwalls.analysis import g_sweep
from domainwalls.minimize import SolveOptions, minimize
from domainwalls.model import Params

SWEEP_G = (2.0, 1.5, 1.2, 1.1, 1.05, 1.02, 1.01)

# criterion id -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def base_params() -> Params:
    return Params(eps=1.0, g=2.0, L=30.0, n=3000)


@pytest.fixture(scope="session")
def base_solution(base_params):
    return minimize(base_params, SolveOptions())


@pytest.fixture(scope="session")
def sweep_records():
    return g_sweep(1.0, SWEEP_G, SolveOptions())


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split(".")[0].lstrip("C")), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key:<5} {'PASS' if ok else 'FAIL'}  {detail}")
