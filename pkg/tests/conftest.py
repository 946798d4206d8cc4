import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from normalcoords import laminar as L
from normalcoords import registration as R
from normalcoords.attachment import VarifoldSpec
from normalcoords.kernel import KernelSpec
from normalcoords.synth import FixtureSpec, generate

settings.register_profile("normalcoords", deadline=None, max_examples=100, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.load_profile("normalcoords")

# One line per acceptance criterion, filled in by tests/test_acceptance.py.
ACCEPTANCE = {}


def record(criterion, ok, detail):
    prev = ACCEPTANCE.get(criterion)
    if prev is not None:
        ok = ok and prev[0]
        detail = prev[1] + "; " + detail
    ACCEPTANCE[criterion] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {key}: {detail}")


class Run:
    """A solved registration with its laminar system."""

    def __init__(self, spec, config):
        self.spec = spec
        self.inner, self.outer, self.oracle = generate(spec)
        self.config = config
        t0 = time.perf_counter()
        self.state, self.report = R.optimize(config, self.inner, self.outer)
        self.runtime = time.perf_counter() - t0
        self.system = L.build_laminar(self.state)


def sphere_config(**kw):
    return R.RegistrationConfig(kernel=KernelSpec(0.5), varifold=VarifoldSpec(1.0), **kw)


@pytest.fixture(scope="session")
def sphere_run():
    # a=1, b=2, subdivision 3 gives 642 vertices per sphere
    return Run(FixtureSpec(kind="sphere-pair", subdivision=3), sphere_config())


@pytest.fixture(scope="session")
def rotated_sphere_run():
    return Run(FixtureSpec(kind="sphere-pair", subdivision=3, inner_rotation=True, seed=7),
               sphere_config())


@pytest.fixture(scope="session")
def cylinder_run():
    spec = FixtureSpec(kind="cylinder-pair", resolution=0.2, extent=(4.0,))
    return Run(spec, sphere_config(max_outer=1))


@pytest.fixture(scope="session")
def fold_run():
    cfg = R.RegistrationConfig(kernel=KernelSpec(0.25), varifold=VarifoldSpec(0.15), max_outer=2)
    return Run(FixtureSpec(kind="folded-sheet-pair"), cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
