import numpy as np
import pytest

from ellparab.symbols import Covariable, biharmonic_heat2, laplace_heat


@pytest.fixture
def lap():
    return laplace_heat()


@pytest.fixture
def bih():
    return biharmonic_heat2()


def cov(xi, q=0.0):
    return Covariable(np.atleast_1d(np.asarray(xi, dtype=float)), q)
