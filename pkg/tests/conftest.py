import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from builders import SAMPLE, tax_for  # noqa: E402

from cybok_profile.mapping import load_reference  # noqa: E402


@pytest.fixture(scope="session")
def tax10():
    return tax_for("1.0.0")


@pytest.fixture(scope="session")
def tax11():
    return tax_for("1.1.0")


@pytest.fixture(scope="session")
def sample_ref(tax10):
    return load_reference(SAMPLE / "reference-1.0.0.csv", tax10)


# Acceptance criteria get one summary line each at the end of the run.
_criteria: dict[str, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        doc = getattr(report, "criterion", name)
        _criteria[name] = ("PASS" if report.outcome == "passed" else "FAIL", doc)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    doc = (item.function.__doc__ or item.name).strip().splitlines()[0] if hasattr(item, "function") else item.name
    rep.criterion = doc


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_criteria):
        status, doc = _criteria[name]
        terminalreporter.write_line(f"{status}  {doc}")
