"""Shared fixtures.

The three scenario runs cost the most wall time (both blow-up runs have to
integrate through the divergence ramp), so they are session scoped and
shared between the harness tests and the acceptance suite.  Everything else
is cheap enough to build per module.
"""

import time

import pytest

from waveplate.config import RunConfig
from waveplate.harness import run_scenario
from waveplate.mesh import build_mesh
from waveplate.params import validate_params
from waveplate.wellconstants import compute_well_constants

# acceptance criteria register one line each; printed after the test run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def params():
    return validate_params(dim=2)


@pytest.fixture(scope="session")
def mesh17():
    return build_mesh(dim=2, n=17)


@pytest.fixture(scope="session")
def mesh33():
    return build_mesh(dim=2, n=33)


@pytest.fixture(scope="session")
def mesh65():
    return build_mesh(dim=2, n=65)


@pytest.fixture(scope="session")
def constants65_timed(mesh65, params):
    t0 = time.perf_counter()
    wc = compute_well_constants(mesh65, params, n_dirs=128, n_starts=8,
                                max_iter=10000, seed=0)
    return {"constants": wc, "elapsed": time.perf_counter() - t0}


@pytest.fixture(scope="session")
def constants65(constants65_timed):
    return constants65_timed["constants"]


def _timed_scenario(cfg):
    t0 = time.perf_counter()
    result = run_scenario(cfg)
    return {"result": result, "elapsed": time.perf_counter() - t0}


@pytest.fixture(scope="session")
def w1_run(tmp_path_factory):
    """Stable-well run on the default grid out to t_end = 20."""
    out = tmp_path_factory.mktemp("run_w1")
    cfg = RunConfig(n=65, t_end=20.0, scenario="global_W1", stride=20,
                    out_dir=str(out), plots=False)
    return _timed_scenario(cfg)


@pytest.fixture(scope="session")
def negative_run(tmp_path_factory):
    """Negative initial total energy, integrated to divergence."""
    out = tmp_path_factory.mktemp("run_neg")
    cfg = RunConfig(n=33, t_end=5.0, scenario="blowup_negative", stride=5,
                    out_dir=str(out), plots=False)
    return _timed_scenario(cfg)


@pytest.fixture(scope="session")
def positive_run(tmp_path_factory):
    """Unstable-well state with small positive total energy, to divergence."""
    out = tmp_path_factory.mktemp("run_pos")
    cfg = RunConfig(n=33, t_end=5.0, scenario="blowup_positive_W2", stride=5,
                    out_dir=str(out), plots=False)
    return _timed_scenario(cfg)
