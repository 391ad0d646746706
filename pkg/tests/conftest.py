from pathlib import Path

import numpy as np
import pytest

from tsslab.model import RunConfig, simulate

ROOT = Path(__file__).resolve().parents[1]
DATA = Path(__file__).resolve().parent / "data"
REGRESSION_CFG = ROOT / "configs" / "regression_2d.cfg"


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def regression_config():
    return RunConfig.from_file(REGRESSION_CFG)


@pytest.fixture(scope="session")
def regression_run(regression_config):
    return simulate(regression_config)


@pytest.fixture(scope="session")
def regression_run_fine(regression_config):
    return simulate(RunConfig.from_file(REGRESSION_CFG, {"grid": "64"}))
