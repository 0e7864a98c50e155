import numpy as np
import pytest

from frechet_lab.radial import RadialDensity, normalize
from frechet_lab.smeary import design_smeary


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def bump3():
    return normalize(RadialDensity.bump(0.5), 3)


@pytest.fixture(scope="session")
def smeary10():
    return design_smeary(1.0, 10)


_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance():
    """record(number, title, checks, seconds) -> bool, with checks as (label, value, passed) triples.

    Prints one PASS/FAIL line per criterion and repeats all of them in the
    terminal summary.
    """

    def record(number, title, checks, seconds):
        ok = all(passed for _, _, passed in checks)
        detail = "; ".join(f"{label} = {value}" for label, value, _ in checks)
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} [{detail}; {seconds:.1f} s]"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
