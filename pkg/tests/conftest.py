import pytest

from poussin.theta import build_theta_table

ACCEPTANCE = []


def record(criterion: str, ok: bool, detail: str = "") -> None:
    ACCEPTANCE.append((criterion, ok, detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {criterion}  {detail}")


@pytest.fixture(scope="session")
def table_1e4():
    return build_theta_table(10**4)


@pytest.fixture(scope="session")
def table_1e6():
    return build_theta_table(10**6)


@pytest.fixture(scope="session")
def table_1e7():
    return build_theta_table(10**7)


@pytest.fixture(name="record")
def record_fixture():
    return record
