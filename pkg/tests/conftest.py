from pathlib import Path

import pytest

from occsim.fixtures import worked_example
from occsim.ingest import load_taxonomy

DATA = Path(__file__).parent / "data"


@pytest.fixture
def tiny_dir() -> Path:
    return DATA / "tiny"


@pytest.fixture
def tiny(tiny_dir):
    return load_taxonomy(tiny_dir)


@pytest.fixture
def worked():
    return worked_example()


def write_csv(path: Path, text: str) -> Path:
    path.write_text(text.lstrip(), encoding="utf-8")
    return path


# -- acceptance summary ---------------------------------------------------------

_criteria: dict[str, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::" not in report.nodeid:
        return
    if report.when != "call" and report.outcome == "passed":
        return
    name = report.nodeid.split("::")[-1]
    detail = dict(report.user_properties).get("detail", "")
    if report.outcome == "skipped" and isinstance(report.longrepr, tuple):
        detail = report.longrepr[2].removeprefix("Skipped: ")
    status = dict(report.user_properties).get("status", report.outcome.upper())
    _criteria[name] = (status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name in sorted(_criteria):
        status, detail = _criteria[name]
        label = name.removeprefix("test_").replace("_", " ")
        terminalreporter.write_line(f"{status:<7} {label:<40} {detail}")
