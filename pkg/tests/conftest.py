from __future__ import annotations

import pytest

from hypercore.analytic import ModelParams, largest_fixed_point


@pytest.fixture(scope="session")
def base_params() -> ModelParams:
    return ModelParams(6.0, 3, 2)


@pytest.fixture(scope="session")
def p_star(base_params) -> float:
    return largest_fixed_point(base_params).p_star


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number:2d}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda x: int(x.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
