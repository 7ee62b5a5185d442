import pytest

ACCEPTANCE = {}
CONSTANTS = {}


@pytest.fixture
def record_criterion():
    """Store ``(passed, detail)`` for an acceptance criterion."""

    def record(label, passed, detail):
        ACCEPTANCE[label] = (bool(passed), detail)

    return record


@pytest.fixture
def record_constant():
    def record(label, value):
        CONSTANTS[label] = value

    return record


def pytest_terminal_summary(terminalreporter):
    if CONSTANTS:
        terminalreporter.section("empirical stability constants")
        for label, value in sorted(CONSTANTS.items()):
            terminalreporter.write_line(f"{label}: max |u| = {value:.4f}")
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for label in sorted(ACCEPTANCE, key=lambda s: (int(s.split()[0].rstrip("ab")), s)):
            passed, detail = ACCEPTANCE[label]
            terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")
