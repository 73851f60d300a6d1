import math

import numpy as np
import pytest

from twopath import PreparationParams, realize


def log_uniform_ratio(rng, lo=1e-6, hi=1e6):
    return 10.0 ** rng.uniform(math.log10(lo), math.log10(hi))


def random_beam(rng):
    """Canonical-form pure beam with log-uniform amplitude ratio."""
    params = PreparationParams(
        r=log_uniform_ratio(rng),
        theta=rng.uniform(0.0, math.pi / 2),
        xi=rng.uniform(0.0, 2.0 * math.pi),
    )
    return realize(params)


def random_hermitian(rng, n=4, scale=1.0):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (g + g.conj().T) / 2.0


def random_density(rng, n=4):
    """Full-rank random mixed state (Ginibre construction)."""
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    m = g @ g.conj().T
    return m / np.trace(m).real


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
