import numpy as np
import pytest

from spdcl import cones


CONE_FAMILIES = {
    "zero": lambda m: cones.Zero(m),
    "full": lambda m: cones.Full(m),
    "nonneg": lambda m: cones.NonNegOrthant(m),
    "soc": lambda m: cones.SecondOrder(max(m, 2)),
    "product": lambda m: cones.Product([cones.Zero(1), cones.NonNegOrthant(max(m // 3, 1)),
                                        cones.SecondOrder(max(m // 2, 2))]),
}


def random_member(cone, rng):
    """A random point of ``cone`` (no projection involved)."""
    if cone.kind == "product":
        return np.concatenate([random_member(p, rng) for p in cone.parts])
    m = cone.dim
    sign = -1.0 if cone.negated else 1.0
    if cone.kind == "zero":
        return np.zeros(m)
    if cone.kind == "full":
        return rng.standard_normal(m)
    if cone.kind == "nonneg":
        return sign * np.abs(rng.standard_normal(m)) * (rng.random(m) < 0.7)
    x = rng.standard_normal(m - 1)
    t = np.linalg.norm(x) * (1.0 + rng.exponential())
    return sign * np.concatenate([[t], x])


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
        terminalreporter.write_line(line)
