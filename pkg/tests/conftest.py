import pytest

from fixture_corpus import build_fixture_corpus


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    """The 200-id synthetic corpus, built once per session."""
    return build_fixture_corpus(tmp_path_factory.mktemp("corpus"))


def pytest_runtest_logreport(report):
    """Print one [ACCEPTANCE] line per acceptance criterion outcome."""
    if "test_acceptance.py::" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if not name.startswith("test_"):
        return
    label = name[len("test_") :].replace("_", "-")
    if report.when == "call":
        outcome = "SKIP" if report.skipped else ("PASS" if report.passed else "FAIL")
        print(f"\n[ACCEPTANCE] {label}: {outcome}", flush=True)
    elif report.when == "setup" and (report.failed or report.skipped):
        print(f"\n[ACCEPTANCE] {label}: {'SKIP' if report.skipped else 'FAIL'}", flush=True)
