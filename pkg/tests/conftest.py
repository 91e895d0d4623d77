import pytest

from hippolab.complexity import EnumerationBudget, enumerate_km


@pytest.fixture(scope="session")
def table14():
    return enumerate_km(EnumerationBudget(14, 32))


@pytest.fixture(scope="session")
def table18():
    return enumerate_km(EnumerationBudget(18, 32))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS, key=lambda k: (int(k.split()[0][1:].rstrip('+')), k)):
        ok, detail = RESULTS[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {key}: {detail}")
