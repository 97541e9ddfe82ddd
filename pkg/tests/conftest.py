import pytest

_ACCEPTANCE: dict = {}


@pytest.fixture
def criterion():
    """``criterion(num, ok, detail)`` records one clause of an acceptance
    criterion; clauses of the same number are combined in the summary."""
    def record(num: int, ok: bool, detail: str) -> bool:
        _ACCEPTANCE.setdefault(num, []).append((bool(ok), detail))
        print(f"CRITERION {num} {'PASS' if ok else 'FAIL'}: {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        parts = _ACCEPTANCE[num]
        verdict = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        terminalreporter.write_line(
            f"CRITERION {num} {verdict}: " + "; ".join(d for _, d in parts))
