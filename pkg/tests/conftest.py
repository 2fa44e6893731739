import numpy as np
import pytest

from twistlab.action import admissible_extension
from twistlab.models.annulus import AnnulusTwistModel
from twistlab.smoothing import build_family


@pytest.fixture(scope="session")
def annulus():
    return AnnulusTwistModel(0.1)


@pytest.fixture(scope="session")
def annulus_family(annulus):
    return build_family(annulus.E, annulus.profile, 0.1, symmetric=True)


@pytest.fixture(scope="session")
def annulus_hat(annulus_family):
    ext, _ = admissible_extension(annulus_family.H_eps)
    return ext


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""
    def add(number: int, label: str, ok: bool, runtime: float, budget: float, detail: str = ""):
        line = (f"criterion {number:2d} [{'PASS' if ok else 'FAIL'}] {label}: {runtime:.2f} s "
                f"(budget {budget:g} s) {detail}").rstrip()
        ACCEPTANCE_LINES.append(line)
        print(line)
    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
