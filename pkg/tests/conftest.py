import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE_RESULTS: dict[str, str] = {}


def record_acceptance(criterion: str, passed: bool, detail: str = "") -> None:
    status = "PASS" if passed else "FAIL"
    _ACCEPTANCE_RESULTS[criterion] = f"{status}  {detail}".rstrip()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(_ACCEPTANCE_RESULTS, key=lambda c: (len(c), c)):
        terminalreporter.write_line(f"criterion {criterion}: {_ACCEPTANCE_RESULTS[criterion]}")
