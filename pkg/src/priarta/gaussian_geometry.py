"""Symmetric-matrix numerics and the closed-form 2-Wasserstein distance.

For two Gaussians N(mu_a, Sigma_a) and N(mu_b, Sigma_b) the squared distance is

    ||mu_a - mu_b||^2 + tr(Sigma_a) + tr(Sigma_b)
        - 2 tr((Sigma_a^{1/2} Sigma_b Sigma_a^{1/2})^{1/2})

All matrix square roots go through a symmetric eigendecomposition with
eigenvalue clamping: floating-point noise routinely produces eigenvalues
around -1e-16 on matrices that are PSD in exact arithmetic.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import (
    ConvergenceError,
    NotPSDError,
    NumericInputError,
    ParameterError,
    ShapeError,
)

Array = np.ndarray

# Relative tolerance below which negative eigenvalues are treated as noise
# and clamped to zero (threshold: -PSD_TOL * lambda_max).
PSD_TOL = 1e-10
# Relative residual budget for linear-algebra identities in double precision.
LIN_TOL = 1e-8


def _check_finite(a: Array, name: str) -> Array:
    a = np.asarray(a, dtype=float)
    if a.size and not np.all(np.isfinite(a)):
        raise NumericInputError(f"{name} contains non-finite entries")
    return a


def symmetrize(a) -> Array:
    """Return (A + A^T) / 2 as a fresh array.

    Bit-identical to the input when the input is already exactly symmetric.
    """
    a = _check_finite(a, "matrix")
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] < 1:
        raise ShapeError("matrix dimension must be >= 1")
    return (a + a.T) / 2.0


def sym_eig(a, name: str = "matrix"):
    """Eigendecomposition of a symmetric matrix.

    Returns (eigenvalues, eigenvectors) with eigenvalues sorted descending and
    eigenvector columns orthonormal, so that Q @ diag(w) @ Q.T reconstructs A.
    """
    a = symmetrize(a)
    try:
        w, q = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigendecomposition of {name} did not converge: {exc}") from exc
    return w[::-1].copy(), q[:, ::-1].copy()


def _clamped_eigh(a: Array, name: str):
    """Eigendecomposition that rejects genuinely negative eigenvalues.

    Eigenvalues in [-PSD_TOL * lambda_max, 0) are floating-point noise and are
    returned as-is for the caller to clamp; anything below that threshold
    raises NotPSDError.
    """
    w, q = sym_eig(a, name=name)
    lam_max = max(float(w[0]), 0.0)
    floor = -PSD_TOL * lam_max
    lam_min = float(w[-1])
    if lam_min < floor:
        raise NotPSDError(
            f"{name} is not PSD within tolerance: eigenvalue {lam_min:.6e} "
            f"is below {floor:.6e}",
            offending_eigenvalue=lam_min,
        )
    return w, q


def psd_clamp(a, name: str = "matrix") -> Array:
    """Project a nearly-PSD symmetric matrix onto the PSD cone.

    Rejects matrices whose most negative eigenvalue exceeds the noise
    tolerance rather than silently repairing them.  Already-PSD input is
    returned symmetrized but not eigen-reconstructed, so clamping is
    idempotent at the bit level and summaries survive wire round-trips
    unchanged.
    """
    sym = symmetrize(a)
    w, q = _clamped_eigh(sym, name)
    if float(w[-1]) >= 0.0:
        return sym
    return symmetrize((q * np.maximum(w, 0.0)) @ q.T)


def sqrtm_psd(a, name: str = "matrix") -> Array:
    """Symmetric PSD square root via eigendecomposition.

    S satisfies S @ S ~= A+ (A with negative noise eigenvalues clamped to 0)
    with Frobenius residual below LIN_TOL * max(1, ||A||_F).
    """
    w, q = _clamped_eigh(a, name)
    return symmetrize((q * np.sqrt(np.maximum(w, 0.0))) @ q.T)


@dataclass(frozen=True)
class GaussianSummary:
    """A (mean, covariance, count) triple summarizing one embedded dataset.

    The covariance is symmetrized and PSD-clamped on construction; both
    arrays are frozen against later mutation.
    """

    mean: Array
    covariance: Array
    count: int

    def __post_init__(self):
        mean = _check_finite(self.mean, "mean")
        if mean.ndim != 1 or mean.shape[0] < 1:
            raise ShapeError(f"mean must be a 1-D vector, got shape {mean.shape}")
        cov = psd_clamp(self.covariance, name="covariance")
        if cov.shape[0] != mean.shape[0]:
            raise ShapeError(
                f"mean length {mean.shape[0]} != covariance dimension {cov.shape[0]}"
            )
        if int(self.count) < 2:
            raise ParameterError(f"summary count must be >= 2, got {self.count}")
        mean = mean.copy()
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "count", int(self.count))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def wasserstein2_gaussian(a: GaussianSummary, b: GaussianSummary) -> float:
    """Closed-form 2-Wasserstein distance between two Gaussian summaries.

    The inner product S_a Sigma_b S_a is re-symmetrized before its square
    root, and the scalar under the outer root is clamped at 0: both are
    nonnegative/symmetric analytically but not numerically.
    """
    if a.dim != b.dim:
        raise ShapeError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if np.array_equal(a.mean, b.mean) and np.array_equal(a.covariance, b.covariance):
        # identical summaries are exactly at distance 0; the formula's
        # cancellation noise under the outer root would exceed the identity
        # tolerance otherwise
        return 0.0
    root_a = sqrtm_psd(a.covariance, name="covariance of a")
    inner = symmetrize(root_a @ b.covariance @ root_a)
    cross = sqrtm_psd(inner, name="cross-covariance term")
    diff = a.mean - b.mean
    squared = (
        float(diff @ diff)
        + float(np.trace(a.covariance))
        + float(np.trace(b.covariance))
        - 2.0 * float(np.trace(cross))
    )
    if not math.isfinite(squared):
        raise NumericInputError("non-finite intermediate in Wasserstein computation")
    return math.sqrt(max(squared, 0.0))
