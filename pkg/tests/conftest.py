import numpy as np
import pytest

from sigspline import SigSplineModel, feature_count


def random_unit_sequences(rng, m, n, d):
    """m sequences of n rows in (0,1)^d, away from the bin boundaries."""
    return [0.02 + 0.96 * rng.random((n, d)) for _ in range(m)]


def random_model(rng, d, level, bins, window=None, scale=0.5):
    k = feature_count(1 + d, level)
    params = [scale * rng.standard_normal((bins, k)) for _ in range(d)]
    return SigSplineModel(d=d, level=level, bins=bins, params=params, window=window)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
