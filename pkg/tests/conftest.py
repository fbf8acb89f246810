import numpy as np
import pytest
from hypothesis import strategies as st

from artifact.geometry import BBox
from artifact.synthetic import smooth_texture_composite


@st.composite
def boxes(draw, min_side=0.01):
    w = draw(st.floats(min_side, 1.0))
    h = draw(st.floats(min_side, 1.0))
    x = draw(st.floats(0.0, 1.0 - w))
    y = draw(st.floats(0.0, 1.0 - h))
    return BBox(x, y, w, h)


def random_box(rng: np.random.Generator, lo=0.02, hi=0.6) -> BBox:
    w, h = rng.uniform(lo, hi, 2)
    x, y = rng.uniform(0, 1 - w), rng.uniform(0, 1 - h)
    return BBox(x, y, w, h)


@pytest.fixture(scope="session")
def textured128():
    return smooth_texture_composite(128, seed=7)


@pytest.fixture(scope="session")
def textured_gray128():
    return smooth_texture_composite(128, seed=7, channels=1)


_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    n = int(report.nodeid.split("test_criterion_")[1][:2])
    if report.failed or report.when == "call":
        _ACCEPTANCE.setdefault(n, "PASS" if report.passed else "FAIL")
        if report.failed:
            _ACCEPTANCE[n] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    import sys
    mod = sys.modules.get("test_acceptance")
    titles = getattr(mod, "TITLES", {})
    details = getattr(mod, "RESULTS", {})
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        line = f"[{_ACCEPTANCE[n]}] {n:>2}. {titles.get(n, '')}"
        if n in details:
            line += f": {details[n]}"
        terminalreporter.write_line(line)
