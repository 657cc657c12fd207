from __future__ import annotations

import pytest

VERDICTS: list[str] = []


class Verdict:
    """Records one PASS/FAIL line per acceptance criterion, then asserts."""

    def __call__(self, criterion: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
        VERDICTS.append(line)
        print(line)
        assert ok, line


@pytest.fixture
def verdict() -> Verdict:
    return Verdict()


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
