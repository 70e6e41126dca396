import numpy as np
import pytest

from semitrans.dataset import Dataset
from semitrans.simulation import DgpSpec, generate
from semitrans.transforms import Family


@pytest.fixture(scope="session")
def model1_data():
    return generate(DgpSpec(model=1, theta_o=0.5, n=100, seed=11))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def small_dataset(n, seed, d=2):
    r = np.random.default_rng(seed)
    x = r.uniform(-0.5, 0.5, size=(n, d))
    y = np.exp(x.sum(axis=1) + 0.3 * r.standard_normal(n))
    return Dataset(y, x)


def admissible_y(family, theta, frac):
    """Map ``frac`` in (0, 1) to an admissible y away from domain edges."""
    if not family.requires_positive:
        return -20.0 + 40.0 * frac
    hi = 20.0
    if family.kind is Family.ZELLNER and theta < 0:
        hi = min(hi, 0.9 * family.upper_domain(theta))
    lo = 0.05
    return lo * (hi / lo) ** frac


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(number, name, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name}"
        if detail:
            line += f"  ({detail})"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
