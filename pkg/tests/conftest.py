import sys
from collections import OrderedDict
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_criteria = OrderedDict()


def pytest_collection_modifyitems(items):
    for item in items:
        names = [m.args[0] for m in item.iter_markers("acceptance") if m.args]
        if names:
            item.user_properties.append(("criteria", tuple(reversed(names))))


def pytest_runtest_logreport(report):
    failed = report.failed or (report.when == "call" and report.skipped)
    for name in dict(report.user_properties).get("criteria", ()):
        _criteria[name] = _criteria.get(name, True) and not failed


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok in _criteria.items():
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}")
    passed = sum(_criteria.values())
    terminalreporter.write_line(f"{passed}/{len(_criteria)} criteria passed")
