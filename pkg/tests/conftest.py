import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_RESULTS = []


def record_criterion(number, title, ok, detail=""):
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else "")
    _RESULTS.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_RESULTS):
        terminalreporter.write_line(line)
