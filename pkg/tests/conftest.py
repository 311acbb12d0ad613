from __future__ import annotations

import dataclasses
import itertools

import pytest

from dockalloc import CostModel, Instance, Quadratic, SeparableConvex

# acceptance criterion lines, printed once at the end of the run
CRITERIA: dict[int, tuple[bool, str]] = {}


def record(number: int, ok: bool, detail: str) -> None:
    CRITERIA[number] = (ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        ok, detail = CRITERIA[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


def e1_cost() -> CostModel:
    # c_1(d,b) = (d-4)^2 + (b-1)^2, c_2(d,b) = d^2 + b^2
    return CostModel((
        SeparableConvex(Quadratic(1, -8, 16), Quadratic(1, -2, 1)),
        SeparableConvex(Quadratic(1), Quadratic(1)),
    ))


@pytest.fixture
def e1() -> Instance:
    return Instance(2, (2, 1), (1, 2), (0, 0), (6, 6), 2, e1_cost())


@pytest.fixture
def e1_tight(e1) -> Instance:
    """E1 with gamma=1: the relaxed optimum then violates the l1 budget."""
    return dataclasses.replace(e1, gamma=1)


def brute_allocations(inst: Instance):
    """Independent nested-loop enumeration of DR's feasible set (no shared code with the oracle)."""
    n = inst.n
    x_bar = inst.x_bar
    for x in itertools.product(*(range(inst.ell[i], inst.u[i] + 1) for i in range(n))):
        if sum(x) != inst.D + inst.B:
            continue
        if sum(abs(x[i] - x_bar[i]) for i in range(n)) > 2 * inst.gamma:
            continue
        for b in itertools.product(*(range(x[i] + 1) for i in range(n))):
            if sum(b) <= inst.B:
                yield tuple(x[i] - b[i] for i in range(n)), b


def total_cost(inst: Instance, d, b):
    return sum(inst.cost.eval(i, d[i], b[i]) for i in range(inst.n))
