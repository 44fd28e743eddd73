import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE: dict[str, tuple[str, str, str]] = {}


@pytest.fixture
def record(request):
    """Attach a one-line measurement to the current acceptance test."""

    def _record(text: str) -> None:
        request.node.user_properties.append(("measured", text))

    return _record


def pytest_runtest_logreport(report):
    marker = "test_acceptance.py::test_ac"
    if marker not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        ac = name.split("_")[1].upper().replace("AC0", "AC")
        detail = "; ".join(v for k, v in report.user_properties if k == "measured")
        _ACCEPTANCE[name] = (ac, "PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        ac, status, detail = _ACCEPTANCE[name]
        terminalreporter.write_line(f"{ac} {status} {name} {detail}".rstrip())
