"""PCA whitening of the raw wind data and sample raw moments."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from sedpce.errors import DegenerateSample, DimensionMismatch, EmptySample

EIG_FLOOR = 1e-12  # relative to the largest eigenvalue


@dataclass(frozen=True)
class Whitener:
    """Affine map ``xi = (x - mean) @ vectors / sqrt(values)``.

    ``values``/``vectors`` hold the full descending eigen-decomposition of
    the (population, 1/N) sample covariance; only the first
    ``n_components`` are used by the transform.
    """

    mean: np.ndarray
    vectors: np.ndarray
    values: np.ndarray
    n_components: int
    variance_kept: float

    @property
    def n_inputs(self) -> int:
        return len(self.mean)

    def transform(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n_inputs:
            raise DimensionMismatch(f"expected {self.n_inputs} inputs, got {x.shape[-1]}")
        m = self.n_components
        return (x - self.mean) @ self.vectors[:, :m] / np.sqrt(self.values[:m])

    def inverse_transform(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        m = self.n_components
        if xi.shape[-1] != m:
            raise DimensionMismatch(f"expected {m} components, got {xi.shape[-1]}")
        return (xi * np.sqrt(self.values[:m])) @ self.vectors[:, :m].T + self.mean

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "vectors": self.vectors.tolist(),
            "values": self.values.tolist(),
            "n_components": self.n_components,
            "variance_kept": self.variance_kept,
            "whitened": True,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Whitener":
        return cls(
            mean=np.asarray(d["mean"], dtype=float),
            vectors=np.asarray(d["vectors"], dtype=float),
            values=np.asarray(d["values"], dtype=float),
            n_components=int(d["n_components"]),
            variance_kept=float(d["variance_kept"]),
        )


def fit_whitener(samples, variance_keep: float = 1.0) -> Whitener:
    """PCA whitening keeping the fewest components reaching ``variance_keep``.

    Components whose eigenvalue is below ``EIG_FLOOR`` times the largest are
    always dropped, whatever ``variance_keep`` asks for.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DegenerateSample("need a 2-D sample with at least two rows")
    if np.isnan(x).any():
        raise ValueError("sample contains NaN")
    if not 0 < variance_keep <= 1:
        raise ValueError("variance_keep must lie in (0, 1]")
    mean = x.mean(axis=0)
    centred = x - mean
    cov = centred.T @ centred / x.shape[0]
    values, vectors = np.linalg.eigh(cov)
    order = np.argsort(values)[::-1]
    values = np.maximum(values[order], 0.0)
    vectors = vectors[:, order]
    # deterministic sign: largest-magnitude entry of each eigenvector positive
    flip = np.sign(vectors[np.argmax(np.abs(vectors), axis=0), np.arange(vectors.shape[1])])
    vectors = vectors * np.where(flip == 0, 1.0, flip)

    if values[0] <= 0:
        raise DegenerateSample("all rows are identical")
    usable = int(np.sum(values > EIG_FLOOR * values[0]))
    frac = np.cumsum(values) / values.sum()
    m = int(np.searchsorted(frac, variance_keep - 1e-12) + 1)
    m = min(m, usable)
    return Whitener(mean, vectors, values, m, float(frac[m - 1]))


def raw_moments(samples, max_order: int) -> np.ndarray:
    """``mu_k = mean(x**k)`` for k = 0..max_order."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise EmptySample("no samples")
    if max_order < 1:
        raise ValueError("max_order must be >= 1")
    powers = np.ones_like(x)
    out = np.empty(max_order + 1)
    out[0] = 1.0
    for k in range(1, max_order + 1):
        powers = powers * x
        out[k] = powers.mean()
    return out


@dataclass(frozen=True)
class MomentTable:
    moments: np.ndarray  # dims x (max_order + 1)
    n_samples: int
    distinct: np.ndarray  # distinct-value count per dimension

    @property
    def max_order(self) -> int:
        return self.moments.shape[1] - 1

    @classmethod
    def from_samples(cls, xi, max_order: int) -> "MomentTable":
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        if xi.shape[0] == 0:
            raise EmptySample("no samples")
        moments = np.array([raw_moments(xi[:, j], max_order) for j in range(xi.shape[1])])
        distinct = np.array([np.unique(xi[:, j]).size for j in range(xi.shape[1])])
        return cls(moments, xi.shape[0], distinct)
