"""Shared fixtures and the acceptance summary printed at the end of a run."""

from __future__ import annotations

import pytest

from solab import builtin_solitons

ACCEPTANCE_LINES: list[str] = []


def record(criterion: int, ok: bool, detail: str) -> str:
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion:2d}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def gaussian3():
    return builtin_solitons("gaussian", {"n": 3})


@pytest.fixture(scope="session")
def cap():
    return builtin_solitons("cap_projected", {"n": 3, "eps": 0.5})


@pytest.fixture(scope="session")
def cap_flat_w():
    return builtin_solitons("cap_projected", {"n": 3, "eps": 0.5, "w_slope": 0.0})


@pytest.fixture(scope="session")
def flat3():
    return builtin_solitons("flat", {"n": 3})
