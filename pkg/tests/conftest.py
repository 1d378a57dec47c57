"""Shared helpers for the test suite."""

import numpy as np
import pytest

from priarta import GaussianSummary


def random_psd(rng, dim, scale=1.0):
    """Random PSD matrix with eigenvalues in (0, scale]."""
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    eig = rng.random(dim) * scale + 1e-6
    return (q * eig) @ q.T


def random_summary(rng, dim, mean_scale=1.0, cov_scale=1.0, count=64):
    mean = rng.standard_normal(dim) * mean_scale
    return GaussianSummary(mean, random_psd(rng, dim, cov_scale), count)


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)
