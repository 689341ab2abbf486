import pytest

from onesided.construction import ParameterProfile, run


@pytest.fixture(scope="session")
def scaled_state():
    return run(ParameterProfile.scaled(), 6, 0)


@pytest.fixture(scope="session")
def paper_state():
    return run(ParameterProfile.paper(), 3, 0)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
