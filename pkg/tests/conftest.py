import numpy as np
import pytest

from oddgeom.expr import Chart, Sampler


@pytest.fixture
def ch3():
    return Chart(("t", "x1", "x2"))


@pytest.fixture
def s3(ch3):
    return Sampler.uniform(ch3, seed=7, count=32)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
