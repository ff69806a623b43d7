import pytest

_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture
def acceptance(request):
    """Record one acceptance line: ``acceptance(number, label, passed, detail)``."""
    lines = request.config.stash[_LINES]

    def record(number, label, passed, detail):
        lines.append((number, f"[{number:02d}/12] {'PASS' if passed else 'FAIL'}  {label}: {detail}"))
        print(lines[-1][1])

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, text in sorted(lines):
        terminalreporter.write_line(text)
