import numpy as np
import pytest

from polygm import EnergyModel, MultiIndex, SampleSet, gaussian_model


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)


@pytest.fixture
def two_node_gaussian():
    return gaussian_model(np.array([[1.0, 0.25], [0.25, 1.0]]))


@pytest.fixture
def quartic_model():
    # E(x) = -(x^2 + 0.5 x^3 + 2 x^4)
    return EnergyModel(
        p=1,
        terms={
            MultiIndex.single(0, 2): 1.0,
            MultiIndex.single(0, 3): 0.5,
            MultiIndex.single(0, 4): 2.0,
        },
    )


@pytest.fixture
def standard_normal_samples(rng):
    return SampleSet(data=rng.standard_normal((400, 2)), seed=1)
