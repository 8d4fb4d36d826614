import numpy as np
import pytest

from mlsb import BathSpec, SiteSystem, Thermo


@pytest.fixture
def dimer():
    return SiteSystem.dimer(200.0, 200.0, omega_bar=16000.0)


@pytest.fixture
def bath_fig1a():
    return BathSpec.ohmic([100.0, 100.0], 50.0, 0.0)


@pytest.fixture
def bath_site1():
    return BathSpec.ohmic([100.0, 0.0], 50.0, 0.0)


@pytest.fixture
def bath_site2():
    return BathSpec.ohmic([0.0, 100.0], 50.0, 0.0)


@pytest.fixture
def th300():
    return Thermo(300.0)


def random_dimer(rng, allow_negative_delta=True):
    delta = rng.uniform(-400.0, 400.0) if allow_negative_delta else rng.uniform(0.0, 400.0)
    v12 = rng.uniform(-300.0, 300.0)
    return SiteSystem.dimer(delta, v12, omega_bar=16000.0)


def random_bath(rng, n=2):
    diag = rng.uniform(0.0, 200.0, size=n)
    c = rng.uniform(-1.0, 1.0)
    corr = np.full((n, n), c)
    np.fill_diagonal(corr, 1.0)
    return BathSpec(BathSpec.ohmic(diag, 50.0, c).shape, diag, corr)
