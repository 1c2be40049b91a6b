"""Shared helpers for the test suite."""

import numpy as np
import pytest

from cvmdi import CovarianceMatrix


def random_bona_fide_cm(rng: np.random.Generator, n_modes: int) -> CovarianceMatrix:
    """A random correlated covariance matrix that satisfies the uncertainty
    bound by construction: A A^T + I >= I dominates the vacuum."""
    a = 0.7 * rng.normal(size=(2 * n_modes, 2 * n_modes))
    return CovarianceMatrix(a @ a.T + np.eye(2 * n_modes))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260813)
