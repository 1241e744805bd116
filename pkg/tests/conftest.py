import pytest

from elmpc.config import load_config

_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def record_criterion(request):
    """Record one acceptance line; the caller asserts afterwards."""
    lines = request.config.stash[_ACCEPTANCE]

    def record(number, title, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {title} ({detail})"
        lines.append(line)
        print(line)
        return passed

    return record


@pytest.fixture(scope="session")
def cfg():
    return load_config()
