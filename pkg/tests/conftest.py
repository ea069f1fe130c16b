import pytest

# criterion number -> (passed, detail); filled by test_acceptance
CRITERIA = {}


def record(number, title, passed, detail):
    CRITERIA[number] = (title, passed, detail)
    print(f"criterion {number} ({title}): {'PASS' if passed else 'FAIL'}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        title, passed, detail = CRITERIA[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number}. {title}: {detail}")


@pytest.fixture
def criterion():
    return record
