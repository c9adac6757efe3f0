import pytest

_CRITERIA: dict[str, str] = {}


def pytest_runtest_logreport(report):
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    if report.when == "call" or report.outcome != "passed":
        prev = _CRITERIA.get(crit, "PASS")
        _CRITERIA[crit] = "PASS" if prev == "PASS" and report.outcome == "passed" else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_CRITERIA, key=lambda c: int(c.split()[0])):
        terminalreporter.write_line(f"criterion {crit}: {_CRITERIA[crit]}")


@pytest.fixture
def criterion(record_property):
    def mark(label: str) -> None:
        record_property("criterion", label)
    return mark
