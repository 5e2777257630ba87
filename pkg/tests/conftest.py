import pytest

# criterion number -> list of (passed, detail); filled by test_acceptance.py
CRITERIA: dict[int, list[tuple[bool, str]]] = {}


@pytest.fixture
def record():
    def _record(number: int, passed: bool, detail: str) -> None:
        CRITERIA.setdefault(number, []).append((bool(passed), detail))
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
    return _record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        results = CRITERIA[number]
        ok = all(p for p, _ in results)
        failed = [d for p, d in results if not p]
        if len(results) == 1:
            detail = results[0][1]
        else:
            detail = f"{len(results) - len(failed)}/{len(results)} cases"
            if failed:
                detail += "; failing: " + " | ".join(failed)
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
