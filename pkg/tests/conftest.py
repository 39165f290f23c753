"""Session-wide fixtures for the expensive solves plus acceptance reporting.

The desk-scale feeder runs take minutes, so every criterion that needs
them shares one solved copy.  Acceptance tests append one line per
criterion to ACCEPTANCE_LINES; the terminal summary prints them together
so the verdicts survive pytest's output capture.
"""

import time

import pytest

from phasebalance import bnb, fixtures, formulation, netmodel

ACCEPTANCE_LINES = []


def record_criterion(num: int, ok: bool, detail: str):
    ACCEPTANCE_LINES.append(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def _solved(model, **kw):
    res = bnb.solve_misocp(model, **kw)
    sol = None
    if res.incumbent is not None:
        sol = formulation.extract_solution(model, res.incumbent)
    return res, sol


@pytest.fixture(scope="session")
def small_cases():
    """The five single-period oracle-comparison feeders, solved globally."""
    cases = []
    for variant in range(5):
        net = netmodel.load_network(fixtures.small_feeder_doc(variant))
        t0 = time.monotonic()
        model = formulation.build_subproblem(net, 0, 3)
        res, sol = _solved(model)
        cases.append(
            {
                "variant": variant,
                "net": net,
                "model": model,
                "res": res,
                "sol": sol,
                "wall": time.monotonic() - t0,
            }
        )
    return cases


@pytest.fixture(scope="session")
def ieee13_case():
    """All four strategies on the desk-scale feeder, solved once."""
    net = netmodel.load_network(fixtures.ieee13_like_doc())
    fits = formulation.build_fits(net)
    runs = {}
    for strategy in (1, 2, 3, 4):
        t0 = time.monotonic()
        model = formulation.build_subproblem(net, 0, strategy, fits=fits)
        res, sol = _solved(model, gap_tol=1e-4)
        runs[strategy] = {"res": res, "sol": sol, "wall": time.monotonic() - t0}
    return {"net": net, "runs": runs}
