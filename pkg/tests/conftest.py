import numpy as np
import pytest

from qddlab.evolution import SimConfig, run

ACCEPTANCE = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""
    def report(number, ok, detail):
        ACCEPTANCE[number] = (bool(ok), detail)
        print("criterion %2d: %s  %s" % (number, "PASS" if ok else "FAIL", detail))
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line("criterion %2d: %s  %s" % (number, "PASS" if ok else "FAIL", detail))


def default_config(**overrides):
    """The reference run: N = 64, dt = 1e-3, T = 2, 5% cosine perturbation."""
    base = dict(n_points=64, dt=1e-3, t_final=2.0, poisson_on=False, v0="zero",
                init="equilibrium_perturbation", amplitude=0.05, mode=1)
    base.update(overrides)
    return SimConfig(**base)


@pytest.fixture(scope="session")
def default_run():
    return run(default_config())


@pytest.fixture(scope="session")
def default_run_poisson():
    return run(default_config(poisson_on=True))
