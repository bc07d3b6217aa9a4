import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

CORPUS = Path(__file__).parent / "corpus"

_acceptance = {}


@pytest.fixture
def corpus():
    return CORPUS


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and report.when in ("setup", "call"):
        name = report.nodeid.split("::")[-1]
        if report.when == "setup" and report.passed:
            return
        _acceptance[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    mod = sys.modules.get("test_acceptance")
    details = getattr(mod, "DETAILS", {}) if mod else {}
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance):
        verdict = "PASS" if _acceptance[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {name}  {details.get(name, '')}")
