import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_acceptance = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or report.failed:
        # a setup or teardown failure also fails the criterion
        prev = _acceptance.get(props["criterion"])
        ok = report.passed and (prev is None or prev[0])
        _acceptance[props["criterion"]] = (ok, props.get("detail", ""))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_acceptance, key=lambda k: int(k.split()[0])):
        ok, detail = _acceptance[key]
        line = f"{'PASS' if ok else 'FAIL'}  {key}"
        terminalreporter.write_line(f"{line}  ({detail})" if detail else line)
