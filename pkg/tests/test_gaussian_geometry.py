"""Symmetric-matrix numerics and the closed-form Gaussian W2 distance."""

import math

import numpy as np
import pytest
import scipy.linalg

from priarta import (
    GaussianSummary,
    NotPSDError,
    NumericInputError,
    ShapeError,
    psd_clamp,
    sqrtm_psd,
    sym_eig,
    symmetrize,
    wasserstein2_gaussian,
)
from priarta.gaussian_geometry import LIN_TOL

from conftest import random_psd, random_summary


# ---------------------------------------------------------------- symmetrize


def test_symmetrize_averages_off_diagonal():
    a = np.array([[1.0, 2.0], [4.0, 5.0]])
    out = symmetrize(a)
    np.testing.assert_array_equal(out, [[1.0, 3.0], [3.0, 5.0]])
    np.testing.assert_array_equal(out, out.T)


def test_symmetrize_rejects_nonsquare():
    with pytest.raises(ShapeError):
        symmetrize(np.ones((2, 3)))


# ------------------------------------------------------------------- sym_eig


def test_sym_eig_identity():
    values, vectors = sym_eig(np.eye(2))
    np.testing.assert_allclose(values, [1.0, 1.0])
    np.testing.assert_allclose(vectors @ vectors.T, np.eye(2), atol=1e-14)


def test_sym_eig_diagonal():
    values, vectors = sym_eig(np.diag([4.0, 1.0]))
    np.testing.assert_allclose(values, [4.0, 1.0])
    # axis-aligned eigenvectors up to sign
    np.testing.assert_allclose(np.abs(vectors), np.eye(2), atol=1e-14)


def test_sym_eig_hand_case():
    # characteristic polynomial x^2 - 4x + 3 has roots 3 and 1
    a = np.array([[2.0, 1.0], [1.0, 2.0]])
    values, vectors = sym_eig(a)
    np.testing.assert_allclose(values, [3.0, 1.0], rtol=1e-12)
    recon = (vectors * values) @ vectors.T
    assert np.linalg.norm(recon - a) <= LIN_TOL * max(1.0, np.linalg.norm(a))


def test_sym_eig_descending_and_orthonormal(rng):
    for dim in (1, 3, 8, 32):
        a = symmetrize(rng.standard_normal((dim, dim)))
        values, vectors = sym_eig(a)
        assert np.all(np.diff(values) <= 0)
        gram = vectors.T @ vectors
        assert np.linalg.norm(gram - np.eye(dim)) <= LIN_TOL
        recon = (vectors * values) @ vectors.T
        assert np.linalg.norm(recon - a) <= LIN_TOL * max(1.0, np.linalg.norm(a))


def test_sym_eig_rejects_nonfinite():
    with pytest.raises(NumericInputError):
        sym_eig(np.array([[np.nan, 0.0], [0.0, 1.0]]))
    with pytest.raises(NumericInputError):
        sym_eig(np.array([[np.inf, 0.0], [0.0, 1.0]]))


# ----------------------------------------------------------------- psd_clamp


def test_psd_clamp_zeroes_tiny_negatives():
    a = np.diag([1.0, -1e-14])
    out = psd_clamp(a)
    values, _ = sym_eig(out)
    assert np.all(values >= 0.0)


def test_psd_clamp_rejects_genuine_negatives():
    with pytest.raises(NotPSDError) as info:
        psd_clamp(np.diag([1.0, -0.5]))
    assert info.value.offending_eigenvalue == pytest.approx(-0.5)


# ----------------------------------------------------------------- sqrtm_psd


def test_sqrtm_identity():
    np.testing.assert_allclose(sqrtm_psd(np.eye(3)), np.eye(3), atol=1e-14)


def test_sqrtm_diagonal():
    np.testing.assert_allclose(sqrtm_psd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), rtol=1e-12)


def test_sqrtm_hand_case():
    # sqrt of [[2,1],[1,2]]: apply sqrt to eigenvalues (3, 1) in the same
    # eigenbasis, giving entries (sqrt(3)+1)/2 on and (sqrt(3)-1)/2 off diagonal
    a = np.array([[2.0, 1.0], [1.0, 2.0]])
    s = sqrtm_psd(a)
    r3 = math.sqrt(3.0)
    expected = np.array([[(r3 + 1) / 2, (r3 - 1) / 2], [(r3 - 1) / 2, (r3 + 1) / 2]])
    np.testing.assert_allclose(s, expected, rtol=1e-12)
    values, _ = sym_eig(s)
    np.testing.assert_allclose(values, [r3, 1.0], rtol=1e-12)


def test_sqrtm_round_trip(rng):
    for dim in (1, 2, 5, 16, 32):
        a = random_psd(rng, dim, scale=3.0)
        s = sqrtm_psd(a)
        np.testing.assert_array_equal(s, s.T)
        assert np.linalg.norm(s @ s - a) <= LIN_TOL * max(1.0, np.linalg.norm(a))


def test_sqrtm_matches_scipy(rng):
    # independent route: scipy's Schur-based square root
    for dim in (2, 4, 8, 16):
        a = random_psd(rng, dim, scale=2.0)
        ours = sqrtm_psd(a)
        theirs = np.real(scipy.linalg.sqrtm(a))
        np.testing.assert_allclose(ours, theirs, atol=1e-8, rtol=1e-8)


def test_sqrtm_clamps_rounding_noise():
    a = np.diag([1.0, -1e-13])
    s = sqrtm_psd(a)
    assert s[1, 1] == 0.0


def test_sqrtm_rejects_indefinite():
    with pytest.raises(NotPSDError):
        sqrtm_psd(np.diag([1.0, -1.0]))


# ----------------------------------------------------------- GaussianSummary


def test_summary_validates_and_freezes():
    s = GaussianSummary([0.0, 1.0], [[2.0, 0.5], [0.5, 1.0]], 10)
    assert s.dim == 2
    assert s.count == 10
    np.testing.assert_array_equal(s.covariance, s.covariance.T)
    with pytest.raises(ValueError):
        s.mean[0] = 99.0
    with pytest.raises(ValueError):
        s.covariance[0, 0] = 99.0


def test_summary_symmetrizes_covariance():
    s = GaussianSummary([0.0, 0.0], [[1.0, 0.2], [0.4, 1.0]], 5)
    assert s.covariance[0, 1] == s.covariance[1, 0] == pytest.approx(0.3)


def test_summary_rejects_bad_inputs():
    with pytest.raises(ShapeError):
        GaussianSummary([0.0, 1.0], [[1.0]], 5)
    with pytest.raises(NumericInputError):
        GaussianSummary([np.nan], [[1.0]], 5)
    with pytest.raises(Exception):
        GaussianSummary([0.0], [[1.0]], 1)  # count below 2
    with pytest.raises(NotPSDError):
        GaussianSummary([0.0, 0.0], np.diag([1.0, -1.0]), 5)


# ------------------------------------------------------------------------ W2


def test_w2_identical_is_zero(rng):
    a = random_summary(rng, 4)
    w = wasserstein2_gaussian(a, a)
    assert 0.0 <= w <= 1e-9 * (1.0 + np.trace(a.covariance))


def test_w2_one_dimensional():
    # (0-3)^2 + (1-2)^2 = 10 for N(0,1) vs N(3,4)
    a = GaussianSummary([0.0], [[1.0]], 10)
    b = GaussianSummary([3.0], [[4.0]], 10)
    w = wasserstein2_gaussian(a, b)
    assert abs(w - math.sqrt(10.0)) <= 1e-9 * math.sqrt(10.0)


def test_w2_two_dimensional_diagonal():
    a = GaussianSummary([0.0, 0.0], np.diag([1.0, 4.0]), 10)
    b = GaussianSummary([0.0, 0.0], np.diag([4.0, 1.0]), 10)
    w = wasserstein2_gaussian(a, b)
    assert abs(w - math.sqrt(2.0)) <= 1e-9 * math.sqrt(2.0)


def test_w2_commuting_reduction(rng):
    # diagonal covariances reduce to a per-axis formula
    for dim in (1, 3, 8):
        mu_a = rng.standard_normal(dim)
        mu_b = rng.standard_normal(dim)
        la = rng.random(dim) + 0.1
        lb = rng.random(dim) + 0.1
        a = GaussianSummary(mu_a, np.diag(la), 10)
        b = GaussianSummary(mu_b, np.diag(lb), 10)
        expected = math.sqrt(
            float(np.sum((mu_a - mu_b) ** 2) + np.sum((np.sqrt(la) - np.sqrt(lb)) ** 2))
        )
        assert abs(wasserstein2_gaussian(a, b) - expected) <= 1e-9 * expected


def test_w2_symmetry_and_triangle(rng):
    for _ in range(50):
        dim = int(rng.integers(1, 9))
        a = random_summary(rng, dim)
        b = random_summary(rng, dim)
        c = random_summary(rng, dim)
        ab = wasserstein2_gaussian(a, b)
        ba = wasserstein2_gaussian(b, a)
        assert abs(ab - ba) <= 1e-9 * (1.0 + ab)
        ac = wasserstein2_gaussian(a, c)
        bc = wasserstein2_gaussian(b, c)
        assert ac <= ab + bc + 1e-8 * (1.0 + ab + bc)


def test_w2_translation_invariance(rng):
    a = random_summary(rng, 5)
    b = random_summary(rng, 5)
    t = rng.standard_normal(5) * 10.0
    w0 = wasserstein2_gaussian(a, b)
    w1 = wasserstein2_gaussian(
        GaussianSummary(a.mean + t, a.covariance, a.count),
        GaussianSummary(b.mean + t, b.covariance, b.count),
    )
    assert abs(w0 - w1) <= 1e-9 * (1.0 + w0)


def test_w2_orthogonal_equivariance(rng):
    a = random_summary(rng, 6)
    b = random_summary(rng, 6)
    q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    w0 = wasserstein2_gaussian(a, b)
    w1 = wasserstein2_gaussian(
        GaussianSummary(q @ a.mean, q @ a.covariance @ q.T, a.count),
        GaussianSummary(q @ b.mean, q @ b.covariance @ q.T, b.count),
    )
    assert abs(w0 - w1) <= 1e-8 * (1.0 + w0)


def test_w2_homogeneity(rng):
    a = random_summary(rng, 4)
    b = random_summary(rng, 4)
    w0 = wasserstein2_gaussian(a, b)
    for s in (0.5, 2.0, 7.25):
        w1 = wasserstein2_gaussian(
            GaussianSummary(s * a.mean, s * s * a.covariance, a.count),
            GaussianSummary(s * b.mean, s * s * b.covariance, b.count),
        )
        assert abs(w1 - s * w0) <= 1e-9 * s * w0


def test_w2_dim_mismatch():
    a = GaussianSummary([0.0], [[1.0]], 5)
    b = GaussianSummary([0.0, 0.0], np.eye(2), 5)
    with pytest.raises(ShapeError):
        wasserstein2_gaussian(a, b)
