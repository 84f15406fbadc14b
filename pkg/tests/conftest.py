import pytest

_RESULTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS] = []


@pytest.fixture
def report(request):
    """Record one acceptance line (``ok=None`` marks it informational).

    The line is printed now and repeated in the terminal summary.
    """
    results = request.config.stash[_RESULTS]

    def _report(label: str, ok, detail: str):
        status = "INFO" if ok is None else ("PASS" if ok else "FAIL")
        line = f"{label}: {status}  {detail}"
        results.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_RESULTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
