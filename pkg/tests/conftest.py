import functools

import numpy as np
import pytest

from jacobi_lab.mesh import triangulate
from jacobi_lab.surfaces import get_surface

SECTION5 = dict(r=0.6, t=0.48, h=0.64)
CATALOG = {
    "clifford": {},
    "equilateral": {},
    "section5": SECTION5,
    "sphere": {},
    "lawson31": {},
    "bipolar-lawson31": {},
}
TORI = [name for name in CATALOG if name != "sphere"]


def surface(name):
    return get_surface(name, **CATALOG.get(name, {}))


@functools.lru_cache(maxsize=None)
def mesh(name, res=None):
    s = surface(name)
    return triangulate(s, res or (s.domain.resolution if name == "sphere" else (128, 128)))


def half(res):
    return tuple(n // 2 for n in res)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_ball(rng, dim, radius):
    """Uniform sample of the closed ball of given radius."""
    y = rng.standard_normal(dim)
    return y / np.linalg.norm(y) * radius * rng.random() ** (1.0 / dim)


ACCEPTANCE_LINES = []


def report_criterion(number, passed, detail):
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
