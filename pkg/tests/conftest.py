import numpy as np
import pytest

from rsma_mgm.scenario import build_nine_cases, default_scenario


@pytest.fixture(scope="session")
def nine_cases():
    return build_nine_cases(default_scenario())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


