"""Shared fixtures.

The two long leapfrog runs (one per bundled speed profile) dominate the
suite's wall time, so they are session-scoped and shared between the
end-to-end inversion tests and the solver-consistency tests.
"""

import numpy as np
import pytest

from patsvd import (AngularGrid, BoundaryCondition, FdtdConfig, PhantomSpec,
                    QuadratureRule, RadialGrid, TimeGrid, enumerate_modes,
                    make_phantom, make_profile, make_triples, run_fdtd)

# A smooth pair of bumps, supported inside the ball, mild angular content.
SMOOTH_PHANTOM = PhantomSpec("gaussian-bump", [
    {"center": [0.20, 0.00], "width": 0.24, "amplitude": 1.0},
    {"center": [-0.15, -0.10], "width": 0.18, "amplitude": 0.6},
])


def _long_fdtd_case(profile_name):
    """Leapfrog a smooth phantom to horizon 200 and bundle everything a
    recovery test needs, with the basis matched to the solver's grids."""
    profile = make_profile(profile_name)
    radial = RadialGrid(256)
    angular = AngularGrid(2, 128)
    quad = QuadratureRule(radial, angular)
    modes = enumerate_modes(profile, radial, BoundaryCondition.NEUMANN, 2,
                            count=300, angular_grid=angular)
    phantom = make_phantom(SMOOTH_PHANTOM, quad, modes=modes)
    time_grid = TimeGrid(0.02, 10000)
    run = run_fdtd(phantom, profile, time_grid, FdtdConfig(cfl=0.45))
    return {
        "profile": profile,
        "quad": quad,
        "modes": modes,
        "phantom": phantom,
        "run": run,
        "triples": make_triples(modes, time_step=run.dt_sim),
    }


@pytest.fixture(scope="session")
def fdtd_case_c1():
    return _long_fdtd_case("c1")


@pytest.fixture(scope="session")
def fdtd_case_c2():
    return _long_fdtd_case("c2")


@pytest.fixture()
def rng():
    return np.random.default_rng(20260814)


# One human-readable verdict line per acceptance check, printed after the
# test summary so a full run ends with the checklist.
ACCEPTANCE_LINES = []


def record_acceptance(slug: str, passed: bool, detail: str):
    ACCEPTANCE_LINES.append((slug, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance checks")
    for slug, passed, detail in ACCEPTANCE_LINES:
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{verdict}  {slug}: {detail}")
