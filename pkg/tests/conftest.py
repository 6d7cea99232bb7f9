import pytest

from eqmem.kernels import available_backends, load_backend

_CRITERIA: list[str] = []


@pytest.fixture(params=available_backends())
def backend(request):
    return load_backend(request.param)


@pytest.fixture
def report():
    """Record one acceptance line; printed in the terminal summary."""
    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
        _CRITERIA.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
