import os
import sys
from collections import OrderedDict

import pytest
from hypothesis import HealthCheck, settings

from swarmplan.environment import Obstacle, Scenario, WorldBounds

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def free_space():
    return Scenario(
        bounds=WorldBounds((0, 0, 0), (100, 100, 50)),
        uav_starts=((10, 10, 10),),
        tasks=((60, 40, 20),),
    )


@pytest.fixture
def one_obstacle():
    return Scenario(
        bounds=WorldBounds((0, 0, 0), (100, 100, 50)),
        uav_starts=((5, 50, 10),),
        tasks=((95, 50, 10),),
        obstacles=(Obstacle((50, 50, 10), 10.0),),
    )


# --- acceptance summary ----------------------------------------------------------------

_ACCEPTANCE: "OrderedDict[int, dict]" = OrderedDict()


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when not in ("setup", "call"):
        return
    criterion, title = marker.args
    entry = _ACCEPTANCE.setdefault(criterion, {"title": title, "ok": True, "notes": []})
    failed = report.failed or hasattr(report, "wasxfail")
    if report.skipped and not hasattr(report, "wasxfail"):
        failed = True
    if failed:
        entry["ok"] = False
        entry["notes"].append(item.name.removeprefix("test_"))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, entry in sorted(_ACCEPTANCE.items()):
        verdict = "PASS" if entry["ok"] else "FAIL"
        extra = f" (failing: {', '.join(entry['notes'])})" if entry["notes"] else ""
        terminalreporter.write_line(f"criterion {criterion:>2} {verdict}: {entry['title']}{extra}")
