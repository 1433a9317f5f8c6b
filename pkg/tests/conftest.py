import numpy as np
import pytest

from causalcdf import Dataset


def make_dataset(rng, n=80, p=4, effect=1.0):
    """Random dataset with both arms guaranteed non-empty."""
    x = rng.normal(size=(n, p))
    logit = 0.3 + 0.8 * x[:, 0]
    a = (rng.random(n) < 1 / (1 + np.exp(-logit))).astype(int)
    if a.sum() == 0:
        a[0] = 1
    if a.sum() == n:
        a[0] = 0
    y = effect * a + x[:, 0] + rng.normal(size=n)
    return Dataset(y=y, a=a, x=x, col_names=tuple(f"x{j+1}" for j in range(p)))


def random_ipw_inputs(rng, n=50):
    """(y, a, pi) triple with both arms non-empty and pi inside (0, 1)."""
    y = rng.normal(size=n)
    a = rng.integers(0, 2, size=n)
    if a.sum() == 0:
        a[0] = 1
    if a.sum() == n:
        a[0] = 0
    pi = rng.uniform(0.05, 0.95, size=n)
    return y, a, pi


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
