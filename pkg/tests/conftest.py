import numpy as np
import pytest

from ovalcount.geometry import OvalCurve

# Filled by test_acceptance.py, one line per criterion.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def random_curve(rng, n_harm=3, budget=0.6):
    """Random valid oval: c0 = 1 and harmonics with sum n^2 |c_n| <= budget keep h + h'' > 0."""
    raw = rng.normal(size=(n_harm, 2))
    n = np.arange(1, n_harm + 1)
    weight = (n ** 2 * np.hypot(raw[:, 0], raw[:, 1])).sum()
    raw *= budget * rng.uniform(0.2, 1.0) / weight
    return OvalCurve(1.0, raw[:, 0], raw[:, 1], name="random")


def random_unimodular(rng, scale=1.0):
    m = rng.normal(scale=scale, size=(2, 2))
    d = np.linalg.det(m)
    if d < 0:
        m[:, 0] *= -1
        d = -d
    return m / np.sqrt(d)


def random_integer_unimodular(rng, steps=6):
    U = np.eye(2, dtype=np.int64)
    for _ in range(steps):
        k = int(rng.integers(-3, 4))
        E = np.array([[1, k], [0, 1]]) if rng.random() < 0.5 else np.array([[1, 0], [k, 1]])
        U = U @ E
    return U


@pytest.fixture(scope="session")
def disk():
    return OvalCurve.disk()


@pytest.fixture(scope="session")
def ellipse():
    return OvalCurve.ellipse(2, 1)


@pytest.fixture(scope="session")
def lopsided():
    """Non-symmetric oval used throughout."""
    return OvalCurve.from_coeffs([1.0, 0.1, 0.05, 0.02, -0.03], name="lopsided")
