import warnings

import numpy as np
import pytest

from qspeckle.interferometer import InterferometerConfig, RegimeWarning


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def icfg():
    return InterferometerConfig()


def spectral_config(bins, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        return InterferometerConfig(n_spectral_bins=bins, **kw)
