import pytest

# (criterion id, passed, summary) appended by tests/test_acceptance.py
ACCEPTANCE: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid, ok, text in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {cid}  {text}")


@pytest.fixture
def record_criterion():
    def record(cid: str, ok: bool, text: str) -> None:
        ACCEPTANCE.append((cid, bool(ok), text))
        print(f"{'PASS' if ok else 'FAIL'}  {cid}  {text}")
        assert ok, text

    return record
