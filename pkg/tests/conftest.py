import pytest
from hypothesis import settings

from rnsemigroup.example_sde import build_example, run_example_suite

settings.register_profile("repo", max_examples=200, derandomize=True, deadline=None, print_blob=True)
settings.load_profile("repo")

CRITERIA_LINES = []


@pytest.fixture(scope="session")
def flagship():
    return build_example(16)


@pytest.fixture(scope="session")
def flagship_report(flagship):
    return run_example_suite(flagship)


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA_LINES):
            terminalreporter.write_line(line)
