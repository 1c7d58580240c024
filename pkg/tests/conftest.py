import functools

import pytest

from crl.deform import build_deformation
from crl.geometry import BackgroundSpace, RegionSpec, build_domain

CRITERIA = {}


def record(number, passed, detail=""):
    CRITERIA[number] = (bool(passed), detail)


@functools.lru_cache(maxsize=None)
def cap_deformation(sign, h=0.02):
    return build_deformation(BackgroundSpace.sphere(2), RegionSpec.ball(2.0), sign, h)


@functools.lru_cache(maxsize=None)
def disk(kind="euclidean", radius=1.0, h=0.05):
    return build_domain(getattr(BackgroundSpace, kind)(2), RegionSpec.ball(radius), h)


@pytest.fixture
def recorder():
    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        ok, detail = CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
