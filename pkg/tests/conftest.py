import contextlib
import time

import pytest

_RESULTS: dict[int, str] = {}


class CriterionRecorder:
    """Record one PASS/FAIL line per acceptance criterion."""

    @contextlib.contextmanager
    def check(self, number: int, title: str):
        details: list[str] = []
        start = time.perf_counter()
        try:
            yield details
        except BaseException:
            _RESULTS[number] = self._line(number, "FAIL", title, details, start)
            print(_RESULTS[number])
            raise
        _RESULTS[number] = self._line(number, "PASS", title, details, start)
        print(_RESULTS[number])

    @staticmethod
    def _line(number, status, title, details, start):
        extra = "; ".join(details)
        took = time.perf_counter() - start
        return f"criterion {number:2d}: {status}  {title} ({took:.1f}s){'  ' + extra if extra else ''}"


@pytest.fixture
def criterion():
    return CriterionRecorder()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        terminalreporter.write_line(_RESULTS[number])
