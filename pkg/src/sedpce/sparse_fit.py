"""Orthogonal matching pursuit with leave-one-out model selection.

OMP adds, one at a time, the candidate column most correlated with the
current residual, refits every active coefficient by least squares, and
records the closed-form leave-one-out error of each intermediate model.
The model with the smallest LOO error along the path is kept. Degree
adaptivity repeats this for each candidate total degree.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from sedpce.errors import AllDegreesFailed, DimensionMismatch, LeverageOne, RankDeficientActiveSet
from sedpce.orthopoly import UnivariateBasis, basis_norms, build_multi_index_set, eval_basis
from sedpce.surrogate import SurrogateModel
from sedpce.transforms import MomentTable, Whitener

log = logging.getLogger(__name__)

DEGREE_CAP = 5


@dataclass(frozen=True)
class RegressionDesign:
    psi: np.ndarray  # N x K, column 0 constant
    y: np.ndarray
    indices: np.ndarray | None = None  # K x M multi-indices for the columns

    def __post_init__(self):
        if self.psi.ndim != 2 or self.psi.shape[0] != len(self.y):
            raise DimensionMismatch("design rows and response length differ")
        if self.psi.shape[0] < 2:
            raise ValueError("need at least two observations")
        if not (np.all(np.isfinite(self.psi)) and np.all(np.isfinite(self.y))):
            raise ValueError("design or response contains NaN/inf")


@dataclass
class SparseExpansion:
    active: np.ndarray  # column positions in the design
    coefficients: np.ndarray
    loo_error: float
    relative_error: float
    degree: int | None = None
    loo_path: list = field(default_factory=list)
    residual_path: list = field(default_factory=list)


def _hat_diagonal(q: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->i", q, q)


def loo_error(a, y, normalize: bool = True) -> float:
    """Closed-form leave-one-out error of the least-squares fit of ``y`` on ``a``.

    ``mean(((y - yhat) / (1 - h))**2)``, divided by the population variance
    of ``y`` when ``normalize`` is set (skipped if that variance is zero).
    """
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    y = np.asarray(y, dtype=float)
    n, k = a.shape
    if n <= k:
        raise LeverageOne(f"{n} observations for {k} columns: fit interpolates")
    q, r = np.linalg.qr(a)
    if np.min(np.abs(np.diag(r))) <= 1e-12 * max(1.0, np.max(np.abs(np.diag(r)))):
        raise np.linalg.LinAlgError("active design is rank deficient")
    coef = np.linalg.solve(r, q.T @ y)
    return _loo_from(q, y - a @ coef, y, normalize)


def _loo_from(q, resid, y, normalize):
    h = _hat_diagonal(q)
    if np.any(h >= 1 - 1e-12):
        raise LeverageOne(f"leverage reaches one at row {int(np.argmax(h))}")
    err = float(np.mean((resid / (1 - h)) ** 2))
    if normalize:
        var = float(np.var(y))
        if var > 0:
            err /= var
    return err


def omp_fit(design: RegressionDesign, max_terms: int | None = None, loo_target: float = 1e-10,
            dependence_tol: float = 1e-10) -> SparseExpansion:
    """Greedy OMP path; returns the step with minimal LOO error.

    Ties in correlation go to the lowest column index. A column nearly in
    the span of the active set is skipped with a ``RankDeficientActiveSet``
    warning. The path stops early once LOO <= ``loo_target``.
    """
    psi, y = design.psi, np.asarray(design.y, dtype=float)
    n, k = psi.shape
    if max_terms is None:
        max_terms = min(n // 2, 200)
    max_terms = max(1, min(max_terms, n - 1, k))
    norms = np.linalg.norm(psi, axis=0)
    usable = norms > 0
    scaled = np.where(usable, psi / np.where(usable, norms, 1.0), 0.0)

    active: list[int] = []
    excluded = ~usable
    resid = y.copy()
    q = np.zeros((n, 0))
    r_mat = np.zeros((0, 0))
    best = None
    loo_path, res_path = [], []

    while len(active) < max_terms:
        corr = np.abs(scaled.T @ resid)
        corr[excluded] = -1.0
        corr[active] = -1.0
        j = int(np.argmax(corr))
        if corr[j] < 0:
            break
        # Gram-Schmidt step (twice for stability) to test dependence and extend QR
        v = scaled[:, j].copy()
        proj = q.T @ v
        v -= q @ proj
        proj2 = q.T @ v
        v -= q @ proj2
        nv = np.linalg.norm(v)
        if nv < dependence_tol:
            warnings.warn(f"column {j} skipped: dependent on the active set", RankDeficientActiveSet,
                          stacklevel=2)
            excluded[j] = True
            continue
        active.append(j)
        q = np.column_stack([q, v / nv])
        r_new = np.zeros((len(active), len(active)))
        r_new[:-1, :-1] = r_mat
        r_new[:-1, -1] = proj + proj2
        r_new[-1, -1] = nv
        r_mat = r_new

        coef_scaled = solve_triangular(r_mat, q.T @ y, lower=False)
        resid = y - scaled[:, active] @ coef_scaled
        res_path.append(float(np.linalg.norm(resid)))
        try:
            loo = _loo_from(q, resid, y, True) if len(active) < n else np.inf
        except LeverageOne:
            loo = np.inf
        loo_path.append(loo)
        if best is None or loo < best[0]:
            best = (loo, list(active), coef_scaled.copy(), resid.copy())
        if loo <= loo_target:
            break
        if len(res_path) > 1 and res_path[-1] >= res_path[-2] and res_path[-1] > 0:
            log.debug("omp: no residual improvement at step %d, stopping", len(active))
            break

    if best is None:
        raise ValueError("OMP selected no columns")
    loo, act, coef_scaled, res = best
    act = np.array(act, dtype=int)
    coef = coef_scaled / norms[act]
    var = float(np.var(y))
    rel = float(np.mean(res ** 2) / var) if var > 0 else float(np.mean(res ** 2))
    return SparseExpansion(act, coef, float(loo), rel, loo_path=loo_path, residual_path=res_path)


@dataclass(frozen=True)
class FitConfig:
    degrees: tuple[int, ...] = (1, 2, 3)
    q_norm: float = 0.75
    max_interaction: int = 2
    loo_target: float = 1e-10
    max_terms: int | None = None
    candidate_cap: int = 200_000
    variance_keep: float = 1.0

    def to_dict(self) -> dict:
        return {
            "degrees": list(self.degrees),
            "q_norm": self.q_norm,
            "max_interaction": self.max_interaction,
            "loo_target": self.loo_target,
            "max_terms": self.max_terms,
            "candidate_cap": self.candidate_cap,
            "variance_keep": self.variance_keep,
        }


def build_bases(moments: MomentTable, degree: int) -> tuple[UnivariateBasis, ...]:
    too_few = np.flatnonzero(moments.distinct < degree + 1)
    if too_few.size:
        raise ValueError(
            f"dimension {too_few[0]} has {moments.distinct[too_few[0]]} distinct values; "
            f"degree {degree} needs at least {degree + 1}"
        )
    return tuple(UnivariateBasis.from_moments(moments.moments[j, : 2 * degree + 1], degree)
                 for j in range(moments.moments.shape[0]))


def adaptive_fit(xi, y, config: FitConfig | None = None, whitener: Whitener | None = None,
                 reference=None, provenance: dict | None = None) -> SurrogateModel:
    """Fit a sparse expansion for each degree in ``config.degrees`` and keep the best LOO.

    ``xi`` are whitened training inputs; ``reference`` (whitened, defaults
    to ``xi``) is the sample whose raw moments define the polynomial bases.
    Degrees are tried in increasing order and the search stops once a
    degree reaches ``loo_target``; ties keep the lower degree.
    """
    config = config or FitConfig()
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    y = np.asarray(y, dtype=float)
    if xi.shape[0] != y.size:
        raise DimensionMismatch("inputs and outputs differ in length")
    if not np.all(np.isfinite(y)):
        raise ValueError("outputs must be finite")
    M = xi.shape[1]
    ref = xi if reference is None else np.atleast_2d(np.asarray(reference, dtype=float))
    if whitener is None:
        whitener = Whitener(np.zeros(M), np.eye(M), np.ones(M), M, 1.0)
    degrees = sorted(d for d in config.degrees if 1 <= d <= DEGREE_CAP)
    if not degrees:
        raise ValueError(f"no usable degree in {config.degrees} (allowed 1..{DEGREE_CAP})")
    table = MomentTable.from_samples(ref, 2 * max(degrees))

    best = None
    failures = {}
    per_degree = {}
    for degree in degrees:
        try:
            bases = build_bases(table, degree)
            cand = build_multi_index_set(M, degree, config.q_norm, config.max_interaction, config.candidate_cap)
            psi = eval_basis(bases, cand, xi)
            exp = omp_fit(RegressionDesign(psi, y, cand.indices), config.max_terms, config.loo_target)
        except Exception as exc:  # noqa: BLE001 - a failing degree should not sink the others
            failures[degree] = f"{type(exc).__name__}: {exc}"
            log.warning("degree %d failed: %s", degree, failures[degree])
            continue
        exp.degree = degree
        per_degree[degree] = exp.loo_error
        log.info("degree %d: %d/%d terms, LOO %.3e", degree, len(exp.active), len(cand), exp.loo_error)
        if best is None or exp.loo_error < best[0].loo_error:
            best = (exp, bases, cand)
        if exp.loo_error <= config.loo_target:
            break
    if best is None:
        raise AllDegreesFailed(f"every degree failed: {failures}")

    exp, bases, cand = best
    indices = cand.indices[exp.active]
    prov = dict(provenance or {})
    prov.setdefault("fit_config", config.to_dict())
    prov.setdefault("n_train", int(y.size))
    prov.setdefault("n_reference", int(ref.shape[0]))
    prov["degree_loo"] = {str(d): v for d, v in per_degree.items()}
    return SurrogateModel(
        whitener=whitener,
        bases=bases,
        indices=indices,
        coefficients=exp.coefficients,
        norms=basis_norms(bases, indices),
        degree=exp.degree,
        loo_error=exp.loo_error,
        relative_error=exp.relative_error,
        n_candidates=len(cand),
        provenance=prov,
    )
