from pathlib import Path

import pytest

from forgecensus.census import load_location_spec
from forgecensus.transport import ForgeClient, TransportConfig

DATA = Path(__file__).parent / "data"
FIXTURES = DATA / "fixtures" / "granada"
GOLDEN = DATA / "golden"
SPEC_PATH = DATA / "specs" / "granada.json"


@pytest.fixture
def replay_client() -> ForgeClient:
    return ForgeClient(TransportConfig.for_replay(FIXTURES))


@pytest.fixture
def granada_spec():
    return load_location_spec(SPEC_PATH.read_text(encoding="utf-8"))


# one visible pass/fail line per acceptance criterion at the end of the run
_acceptance_results: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    outcome = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
    _acceptance_results.append((report.nodeid.split("::")[-1], outcome))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, outcome in _acceptance_results:
        terminalreporter.write_line(f"{outcome}  {name}")
