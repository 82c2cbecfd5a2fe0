"""Shared test helpers.

Expected values in the test modules are computed through independent
routes (hand algebra, direct summation, scipy reference densities); the
helpers here only build inputs, never expectations.
"""

import numpy as np
import pytest

from latspec import CoherenceMatrix, MultiLattice, QuasiMaternParams


def random_correlation(rng: np.random.Generator, m: int) -> np.ndarray:
    """A random well-conditioned correlation matrix."""
    w = rng.standard_normal((m, m))
    c = w @ w.T + m * np.eye(m)
    d = 1 / np.sqrt(np.diag(c))
    return d[:, None] * c * d[None, :]


def make_lattice(rng: np.random.Generator, m: int, n1: int, n2: int, delta: float = 1.0) -> MultiLattice:
    return MultiLattice(
        values=rng.standard_normal((m, n1, n2)),
        labels=tuple(f"el{i + 1}" for i in range(m)),
        delta=delta,
    )


def make_params(sigma2s, alphas, delta: float = 1.0):
    return tuple(
        QuasiMaternParams(sigma2=s, alpha=a, delta=delta) for s, a in zip(sigma2s, alphas)
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def rho2():
    return CoherenceMatrix(np.array([[1.0, 0.5], [0.5, 1.0]]))
