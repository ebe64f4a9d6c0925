import math

import pytest

from exmiura import ExtrusionSpec, MiuraParams, build_extruded_model

DESK = MiuraParams(14.26, 10.0, 0.223 * math.pi, 0.756 * math.pi)
DESK_DEPTH = 14.294


@pytest.fixture(scope="session")
def desk():
    return DESK


@pytest.fixture(scope="session")
def desk_model():
    return build_extruded_model(DESK, ExtrusionSpec(DESK_DEPTH), 4, 4)


@pytest.fixture(scope="session")
def strip_model():
    """Three rows, one cut: the patch with a one-parameter folding motion."""
    return build_extruded_model(DESK, ExtrusionSpec(DESK_DEPTH, (3,)), 3, 4)


_CRITERIA = []


@pytest.fixture
def criterion(request, capsys):
    """Record one acceptance line: call with (number, detail) once the checks are done."""
    state = {}

    def record(number, detail):
        state["line"] = (number, detail)

    yield record
    if "line" not in state:
        return
    number, detail = state["line"]
    rep = getattr(request.node, "rep_call", None)
    verdict = "PASS" if rep is not None and rep.passed else "FAIL"
    line = f"criterion {number:>2} {verdict}: {detail}"
    _CRITERIA.append(line)
    with capsys.disabled():
        print(f"\n{line}")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
