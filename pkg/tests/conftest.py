import os
import sys

from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "repro",
    derandomize=True,
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repro"))


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None:
        return
    seen = {line.split(":", 1)[0].split()[-1] for line in module.REPORT_LINES}
    ran = sorted(
        {rep.nodeid.split("test_criterion_", 1)[1].split("_", 1)[0] for key in ("passed", "failed") for rep in terminalreporter.stats.get(key, []) if "test_criterion_" in rep.nodeid and rep.when == "call"},
        key=int,
    )
    terminalreporter.section("acceptance criteria")
    for line in module.REPORT_LINES:
        terminalreporter.write_line(line)
    for number in ran:
        if number not in seen:
            terminalreporter.write_line(f"FAIL criterion {number}: raised before reporting")
