"""Clipping and Gaussian summarization of embedding sets (the seller-side
"compute mean and covariance" step)."""

from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyInputError,
    InsufficientSamplesError,
    NumericInputError,
    ParameterError,
    ShapeError,
)
from .gaussian_geometry import GaussianSummary, symmetrize

# Slack on the row-norm invariant of clipped sets: x * (R / ||x||) can land a
# hair above R in floating point.
CLIP_SLACK = 1e-12


@dataclass(frozen=True)
class EmbeddingSet:
    """n row vectors in d dimensions with a declared l2 clip radius.

    ``clipped`` records whether every row is inside the radius-R ball; the
    Gaussian mechanism clears it because noising pushes rows back out.
    """

    vectors: np.ndarray
    clip_radius: float
    clipped: bool

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float)
        if v.ndim != 2:
            raise ShapeError(f"vectors must be a 2-D matrix, got shape {v.shape}")
        n, d = v.shape
        if n == 0:
            raise EmptyInputError("embedding set has no rows")
        if n < 2:
            raise InsufficientSamplesError(f"embedding set needs >= 2 rows, got {n}")
        if d < 1:
            raise ShapeError("embedding dimension must be >= 1")
        if not np.all(np.isfinite(v)):
            raise NumericInputError("embedding vectors contain non-finite entries")
        r = float(self.clip_radius)
        if not (r > 0.0 and np.isfinite(r)):
            raise ParameterError(f"clip radius must be a positive real, got {self.clip_radius}")
        if self.clipped:
            norms = np.linalg.norm(v, axis=1)
            worst = float(norms.max())
            if worst > r * (1.0 + CLIP_SLACK):
                raise ParameterError(
                    f"set is flagged clipped but a row has norm {worst} > {r}"
                )
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "clip_radius", r)
        object.__setattr__(self, "clipped", bool(self.clipped))

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def clip_to_ball(vectors, radius: float) -> EmbeddingSet:
    """Scale every row with ||x|| > R back onto the radius-R sphere.

    Rows already inside the ball are carried over bit-identically, so the
    operation is idempotent and direction-preserving.
    """
    if not (float(radius) > 0.0 and np.isfinite(float(radius))):
        raise ParameterError(f"clip radius must be a positive real, got {radius}")
    v = np.asarray(vectors, dtype=float)
    if v.ndim != 2:
        raise ShapeError(f"vectors must be a 2-D matrix, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NumericInputError("vectors contain non-finite entries")
    radius = float(radius)
    norms = np.linalg.norm(v, axis=1)
    out = v.copy()
    mask = norms > radius
    if mask.any():
        out[mask] *= (radius / norms[mask])[:, None]
    return EmbeddingSet(out, radius, clipped=True)


def sample_mean(embeddings: EmbeddingSet) -> np.ndarray:
    """Arithmetic mean of the rows."""
    if embeddings.count < 1:
        raise EmptyInputError("cannot average an empty embedding set")
    return embeddings.vectors.mean(axis=0)


def sample_covariance(embeddings: EmbeddingSet) -> np.ndarray:
    """Unbiased sample covariance with the 1/(n-1) normalizer."""
    n = embeddings.count
    if n < 2:
        raise InsufficientSamplesError(f"covariance needs >= 2 rows, got {n}")
    centered = embeddings.vectors - embeddings.vectors.mean(axis=0)
    return symmetrize(centered.T @ centered / (n - 1))


def summarize(embeddings: EmbeddingSet) -> GaussianSummary:
    """Package mean, covariance, and count into a GaussianSummary."""
    return GaussianSummary(
        mean=sample_mean(embeddings),
        covariance=sample_covariance(embeddings),
        count=embeddings.count,
    )


def debias_covariance(summary: GaussianSummary, sigma: float) -> GaussianSummary:
    """Remove the systematic sigma^2 * I inflation a noisy covariance carries.

    The result is clamped back onto the PSD cone; mean and count pass through.
    Off by default in the pipeline: the noisy covariance is normally used
    as-is, this correction exists for buyers who want the inflation removed.
    """
    sigma = float(sigma)
    if not (sigma >= 0.0 and np.isfinite(sigma)):
        raise ParameterError(f"sigma must be a nonnegative real, got {sigma}")
    if sigma == 0.0:
        return summary
    shifted = summary.covariance - (sigma**2) * np.eye(summary.dim)
    w, q = np.linalg.eigh(shifted)
    repaired = symmetrize((q * np.maximum(w, 0.0)) @ q.T)
    return GaussianSummary(summary.mean, repaired, summary.count)
