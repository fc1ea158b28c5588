import numpy as np
import pytest

from zipolicy.experiment import ExperimentConfig, generate_dataset
from zipolicy.index import build_index


@pytest.fixture(scope="session")
def default_cfg():
    return ExperimentConfig()


@pytest.fixture(scope="session")
def generated(default_cfg):
    return generate_dataset(default_cfg)


@pytest.fixture(scope="session")
def demo_index(generated):
    return build_index(generated.dataset)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
