from importlib import resources

import pytest

from varcond.problemfile import load

FIXTURES = resources.files("varcond") / "fixtures"
NAMES = ("example1", "example2", "example3", "example4")


def fixture_path(name):
    return str(FIXTURES / f"{name}.varc")


_cache = {}


def fixture(name):
    if name not in _cache:
        _cache[name] = load(fixture_path(name))
    return _cache[name]


@pytest.fixture(params=NAMES)
def any_fixture(request):
    return fixture(request.param)


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[number])
