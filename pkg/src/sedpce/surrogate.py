"""The fitted surrogate: whitener + univariate bases + sparse expansion."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from sedpce.orthopoly import UnivariateBasis, eval_basis
from sedpce.transforms import Whitener
from sedpce.errors import DimensionMismatch, InvariantViolation


@dataclass(frozen=True)
class SurrogateModel:
    whitener: Whitener
    bases: tuple[UnivariateBasis, ...]
    indices: np.ndarray  # active multi-indices, K_active x M
    coefficients: np.ndarray
    norms: np.ndarray  # E[Phi_i^2] for the active terms
    degree: int
    loo_error: float
    relative_error: float
    n_candidates: int
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        M = self.whitener.n_components
        if len(self.bases) != M or self.indices.shape[1] != M:
            raise InvariantViolation("surrogate parts disagree on the input dimension")
        if len(self.coefficients) != self.indices.shape[0] or len(self.norms) != len(self.coefficients):
            raise InvariantViolation("coefficient/norm/index counts disagree")
        if np.any(~(self.norms > 0)):
            raise InvariantViolation("basis norms must be positive")

    @property
    def n_inputs(self) -> int:
        return self.whitener.n_inputs

    def to_dict(self) -> dict:
        return {
            "format": "sedpce-surrogate/1",
            "whitener": self.whitener.to_dict(),
            "bases": [b.to_dict() for b in self.bases],
            "indices": self.indices.tolist(),
            "coefficients": self.coefficients.tolist(),
            "norms": self.norms.tolist(),
            "degree": self.degree,
            "loo_error": self.loo_error,
            "relative_error": self.relative_error,
            "n_candidates": self.n_candidates,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SurrogateModel":
        whitener = Whitener.from_dict(d["whitener"])
        indices = np.asarray(d["indices"], dtype=np.int64).reshape(-1, whitener.n_components)
        return cls(
            whitener=whitener,
            bases=tuple(UnivariateBasis.from_dict(b) for b in d["bases"]),
            indices=indices,
            coefficients=np.asarray(d["coefficients"], dtype=float),
            norms=np.asarray(d["norms"], dtype=float),
            degree=int(d["degree"]),
            loo_error=float(d["loo_error"]),
            relative_error=float(d["relative_error"]),
            n_candidates=int(d["n_candidates"]),
            provenance=d.get("provenance", {}),
        )


def predict(model: SurrogateModel, x) -> np.ndarray:
    """Surrogate cost for raw input rows (or a single row)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != model.n_inputs:
        raise DimensionMismatch(f"expected {model.n_inputs} inputs, got {x.shape[1]}")
    xi = model.whitener.transform(x)
    y = eval_basis(model.bases, model.indices, xi) @ model.coefficients
    return y[0] if single else y


def analytic_moments(model: SurrogateModel) -> tuple[float, float]:
    """(mean, variance) read off the expansion coefficients.

    Non-constant terms have zero mean under the measure the bases were
    built from, so the mean is the constant coefficient and the variance
    is ``sum c_i^2 E[Phi_i^2]`` over the rest.
    """
    const = ~np.any(model.indices > 0, axis=1)
    mean = float(model.coefficients[const].sum())
    var = float(np.sum(model.coefficients[~const] ** 2 * model.norms[~const]))
    return mean, var
