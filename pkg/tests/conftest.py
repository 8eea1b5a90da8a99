import numpy as np
import pytest

from cocyclib.measure import golden_mean_markov, uniform_bernoulli
from cocyclib.sft import full_shift, golden_mean_shift


@pytest.fixture
def q2():
    return full_shift(2)


@pytest.fixture
def golden():
    return golden_mean_shift()


@pytest.fixture
def mu2():
    return uniform_bernoulli(2)


@pytest.fixture
def mu_golden():
    return golden_mean_markov()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
