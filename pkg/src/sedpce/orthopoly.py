"""Monic orthogonal polynomials from raw moments, and tensor-product bases.

For degree ``l`` the coefficients ``p_0..p_l`` of the monic polynomial
orthogonal to all lower degrees solve

    sum_k p_k mu_{i+k} = 0   for i = 0..l-1,     p_l = 1,

i.e. a Hankel block of moments with the unit row appended. This only
needs moments up to order ``2l - 1``, so it works the same for analytic
moments and for moments of a raw data set.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from sedpce.errors import (
    CandidateExplosion,
    DimensionMismatch,
    IllConditioned,
    NonPositiveNorm,
    SingularMomentMatrix,
)

COND_WARN = 1e12
COND_SINGULAR = 1e15


def moment_matrix(moments, degree: int) -> np.ndarray:
    l = degree
    mat = np.zeros((l + 1, l + 1))
    for i in range(l):
        mat[i] = moments[i:i + l + 1]
    mat[l, l] = 1.0
    return mat


def monic_orthogonal_coeffs(moments, degree: int, return_cond: bool = False):
    """Coefficients ``[p_0, ..., p_degree]`` (ascending powers, ``p_degree = 1``)."""
    moments = np.asarray(moments, dtype=float)
    l = int(degree)
    if l < 0:
        raise ValueError("degree must be >= 0")
    if l == 0:
        return (np.array([1.0]), 1.0) if return_cond else np.array([1.0])
    if moments.size < 2 * l:
        raise ValueError(f"degree {l} needs moments through order {2 * l - 1}")
    if not np.all(np.isfinite(moments[: 2 * l])):
        raise SingularMomentMatrix("non-finite moment")
    mat = moment_matrix(moments, l)
    cond = float(np.linalg.cond(mat))
    if not np.isfinite(cond) or cond > COND_SINGULAR:
        raise SingularMomentMatrix(f"moment matrix for degree {l} is singular (cond={cond:.3g})")
    if cond > COND_WARN:
        warnings.warn(f"moment matrix for degree {l} has condition {cond:.3g}", IllConditioned, stacklevel=2)
    rhs = np.zeros(l + 1)
    rhs[l] = 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", linalg.LinAlgWarning)
        try:
            p = linalg.lu_solve(linalg.lu_factor(mat), rhs)
        except (linalg.LinAlgWarning, ValueError, np.linalg.LinAlgError) as exc:
            raise SingularMomentMatrix(str(exc)) from exc
    p[l] = 1.0
    return (p, cond) if return_cond else p


@dataclass(frozen=True)
class UnivariateBasis:
    """Monic orthogonal polynomials of degree 0..D for one input dimension.

    ``coeffs[l, :l+1]`` holds ascending-power coefficients of degree ``l``;
    entries above the diagonal are zero.
    """

    coeffs: np.ndarray
    moments: np.ndarray
    conditions: np.ndarray

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    @classmethod
    def from_moments(cls, moments, degree: int) -> "UnivariateBasis":
        moments = np.asarray(moments, dtype=float)
        coeffs = np.zeros((degree + 1, degree + 1))
        conds = np.ones(degree + 1)
        for l in range(degree + 1):
            p, conds[l] = monic_orthogonal_coeffs(moments, l, return_cond=True)
            coeffs[l, : l + 1] = p
        return cls(coeffs, moments, conds)

    def evaluate(self, x) -> np.ndarray:
        """Values of every degree at ``x``: shape ``x.shape + (D + 1,)``, Horner per degree."""
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape + (self.degree + 1,))
        for l in range(self.degree + 1):
            acc = np.zeros_like(x)
            for c in self.coeffs[l, l::-1]:
                acc = acc * x + c
            out[..., l] = acc
        return out

    def norms(self) -> np.ndarray:
        """E[phi_l^2] under the moment measure, requires moments through 2D."""
        D = self.degree
        if self.moments.size < 2 * D + 1:
            raise ValueError(f"norms need moments through order {2 * D}")
        hank = np.array([[self.moments[a + b] for b in range(D + 1)] for a in range(D + 1)])
        vals = np.einsum("la,ab,lb->l", self.coeffs, hank, self.coeffs)
        return vals

    def to_dict(self) -> dict:
        return {
            "coeffs": self.coeffs.tolist(),
            "moments": self.moments.tolist(),
            "conditions": self.conditions.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "UnivariateBasis":
        return cls(
            np.asarray(d["coeffs"], dtype=float),
            np.asarray(d["moments"], dtype=float),
            np.asarray(d["conditions"], dtype=float),
        )


@dataclass(frozen=True)
class MultiIndexSet:
    indices: np.ndarray  # K x M, int
    dims: int
    degree: int
    q_norm: float
    max_interaction: int

    def __len__(self) -> int:
        return self.indices.shape[0]

    @property
    def total_degree(self) -> np.ndarray:
        return self.indices.sum(axis=1)

    @property
    def interaction(self) -> np.ndarray:
        return (self.indices > 0).sum(axis=1)

    @property
    def qnorms(self) -> np.ndarray:
        return np.sum(self.indices.astype(float) ** self.q_norm, axis=1) ** (1.0 / self.q_norm)

    def subset(self, rows) -> "MultiIndexSet":
        return MultiIndexSet(self.indices[np.asarray(rows, dtype=int)], self.dims, self.degree,
                             self.q_norm, self.max_interaction)


def _qnorm_ok(degs, degree, q) -> bool:
    return sum(d ** q for d in degs) ** (1.0 / q) <= degree + 1e-10


def build_multi_index_set(dims: int, degree: int, q_norm: float = 0.75, max_interaction: int = 2,
                          cap: int = 200_000) -> MultiIndexSet:
    """All multi-indices with q-norm <= degree and at most ``max_interaction`` active dims.

    Ordered by total degree, then reverse-lexicographically inside each
    degree, so ``(1, 0)`` precedes ``(0, 1)``.
    """
    if dims < 1:
        raise ValueError("dims must be >= 1")
    if degree < 0:
        raise ValueError("degree must be >= 0")
    if not 0 < q_norm <= 1:
        raise ValueError("q_norm must lie in (0, 1]")
    if max_interaction < 1:
        raise ValueError("max_interaction must be >= 1")
    r = min(max_interaction, dims)
    # admissible degree patterns per interaction order, then count before building
    patterns = {
        k: [degs for degs in itertools.product(range(1, degree + 1), repeat=k) if _qnorm_ok(degs, degree, q_norm)]
        for k in range(1, r + 1)
    }
    count = 1 + sum(math.comb(dims, k) * len(p) for k, p in patterns.items())
    if count > cap:
        raise CandidateExplosion(
            f"{count} candidate terms exceed the cap of {cap}; lower degree/q_norm/max_interaction"
        )
    out = np.zeros((count, dims), dtype=np.int64)
    row = 1
    for k, pats in patterns.items():
        if not pats:
            continue
        for combo in itertools.combinations(range(dims), k):
            for degs in pats:
                out[row, list(combo)] = degs
                row += 1
    total = out.sum(axis=1)
    order = np.lexsort(tuple(-out[:, j] for j in reversed(range(dims))) + (total,))
    return MultiIndexSet(out[order], dims, degree, q_norm, max_interaction)


def eval_basis(bases, index_set, xi) -> np.ndarray:
    """Design matrix ``Psi[n, i] = prod_j phi_j^{(alpha_ij)}(xi[n, j])``."""
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    alpha = index_set.indices if isinstance(index_set, MultiIndexSet) else np.asarray(index_set)
    alpha = np.atleast_2d(alpha)
    M = alpha.shape[1]
    if xi.shape[1] != M or len(bases) != M:
        raise DimensionMismatch(f"expected {M} dims, got inputs {xi.shape[1]} and {len(bases)} bases")
    psi = np.ones((xi.shape[0], alpha.shape[0]))
    for j in range(M):
        active = np.flatnonzero(alpha[:, j] > 0)
        if active.size == 0:
            continue
        vals = bases[j].evaluate(xi[:, j])
        psi[:, active] *= vals[:, alpha[active, j]]
    return psi


def eval_basis_row(bases, index_set, xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if xi.ndim != 1:
        raise DimensionMismatch("expected a single point")
    return eval_basis(bases, index_set, xi[None, :])[0]


def basis_norms(bases, index_set) -> np.ndarray:
    """E[Phi_i^2] as the product of univariate norms (inputs treated as independent)."""
    alpha = index_set.indices if isinstance(index_set, MultiIndexSet) else np.atleast_2d(index_set)
    out = np.ones(alpha.shape[0])
    for j, b in enumerate(bases):
        out *= b.norms()[alpha[:, j]]
    if np.any(~(out > 0)):
        raise NonPositiveNorm("non-positive basis norm; moments inconsistent or ill-conditioned")
    return out
