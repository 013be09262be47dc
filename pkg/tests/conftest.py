import pytest


def pytest_configure(config):
    config.acceptance_lines = []


@pytest.fixture
def record(request):
    """Log one acceptance verdict; the line is echoed in the terminal summary."""

    def _record(criterion: int, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'}  criterion {criterion:>2}: {detail}"
        request.config.acceptance_lines.append((criterion, line))
        print(line)
        assert ok, line

    return _record


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines, key=lambda t: t[0]):
            terminalreporter.write_line(line)
