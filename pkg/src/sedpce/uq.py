"""Surrogate workflow and the statistics used to compare it with Monte Carlo.

Workflow: pick a small training subset of the scenario data, solve the
dispatch on it, fit the sparse expansion (whitener and polynomial moments
taken from the full unlabeled scenario set), then push every scenario
through the surrogate and summarize the resulting cost sample.
"""
from __future__ import annotations

import csv
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from sedpce import grid
from sedpce.errors import (
    DegenerateSample,
    DegenerateSampleWarning,
    InsufficientData,
    ZeroBaseline,
)
from sedpce.sparse_fit import FitConfig, adaptive_fit
from sedpce.surrogate import SurrogateModel, analytic_moments, predict
from sedpce.transforms import fit_whitener

GRID_POINTS = 512


@dataclass
class UqReport:
    mean: float
    std: float
    n: int
    pdf_grid: np.ndarray
    pdf: np.ndarray
    cdf_grid: np.ndarray
    cdf: np.ndarray
    wall_seconds: float = 0.0
    analytic: dict | None = None  # {"mean", "std"} from expansion coefficients
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "mean": self.mean,
            "std": self.std,
            "n": self.n,
            "pdf": {"grid": self.pdf_grid.tolist(), "density": self.pdf.tolist()},
            "cdf": {"grid": self.cdf_grid.tolist(), "prob": self.cdf.tolist()},
            "wall_seconds": self.wall_seconds,
        }
        if self.analytic is not None:
            out["analytic"] = dict(self.analytic)
        if self.provenance:
            out["provenance"] = self.provenance
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "UqReport":
        return cls(
            mean=float(d["mean"]),
            std=float(d["std"]),
            n=int(d["n"]),
            pdf_grid=np.asarray(d["pdf"]["grid"], dtype=float),
            pdf=np.asarray(d["pdf"]["density"], dtype=float),
            cdf_grid=np.asarray(d["cdf"]["grid"], dtype=float),
            cdf=np.asarray(d["cdf"]["prob"], dtype=float),
            wall_seconds=float(d.get("wall_seconds") or 0.0),
            analytic=d.get("analytic"),
            provenance=d.get("provenance", {}),
        )

    def write_curves_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "pdf", "cdf"])
            for x, p, c in zip(self.pdf_grid, self.pdf, self.cdf):
                w.writerow([repr(float(x)), repr(float(p)), repr(float(c))])

    def check(self) -> list[str]:
        """Violated report invariants (empty when healthy)."""
        problems = []
        if self.std < 0:
            problems.append("negative std")
        if np.any(np.diff(self.cdf) < 0):
            problems.append("CDF not monotone")
        if self.cdf.size and (self.cdf[0] > 0.02 or self.cdf[-1] < 0.98):
            problems.append("CDF does not span [0, 1]")
        if np.any(self.pdf < 0):
            problems.append("negative density")
        mass = float(trapezoid(self.pdf, self.pdf_grid))
        if not 0.98 <= mass <= 1.02:
            problems.append(f"PDF integrates to {mass:.4f}")
        return problems


def empirical_stats(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if v.size < 2 or not np.all(np.isfinite(v)):
        raise ValueError("need at least two finite values")
    return float(v.mean()), float(v.std(ddof=1))


def silverman_bandwidth(values) -> float:
    v = np.asarray(values, dtype=float)
    sd = v.std(ddof=1)
    q75, q25 = np.percentile(v, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34) if q75 > q25 else sd
    return 0.9 * spread * v.size ** (-0.2)


def _bandwidth(v: np.ndarray) -> float:
    h = silverman_bandwidth(v)
    if not h > 0:
        warnings.warn("all values equal; using a floor bandwidth", DegenerateSampleWarning, stacklevel=3)
        h = 1e-6 * max(1.0, float(np.abs(v).max()))
    return h


def value_grid(values, points: int = GRID_POINTS) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    h = _bandwidth(v)
    return np.linspace(v.min() - 3 * h, v.max() + 3 * h, points)


def kde_pdf(values, grid_x=None, points: int = GRID_POINTS) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian KDE with Silverman's rule, on ``points`` nodes spanning min-3h..max+3h."""
    v = np.asarray(values, dtype=float)
    if v.size < 2 or not np.all(np.isfinite(v)):
        raise ValueError("need at least two finite values")
    h = _bandwidth(v)
    if grid_x is None:
        grid_x = np.linspace(v.min() - 3 * h, v.max() + 3 * h, points)
    density = np.zeros_like(grid_x)
    chunk = max(1, 4_000_000 // max(1, grid_x.size))
    for start in range(0, v.size, chunk):
        z = (grid_x[:, None] - v[None, start:start + chunk]) / h
        density += np.exp(-0.5 * z * z).sum(axis=1)
    density /= v.size * h * np.sqrt(2 * np.pi)
    return grid_x, density


def empirical_cdf(values, grid_x=None, points: int = GRID_POINTS) -> tuple[np.ndarray, np.ndarray]:
    """Right-continuous empirical CDF sampled on a grid (KDE grid by default)."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size < 1:
        raise ValueError("no values")
    if grid_x is None:
        grid_x = value_grid(v, points)
    return grid_x, np.searchsorted(v, grid_x, side="right") / v.size


def make_report(values, wall_seconds: float = 0.0, analytic=None, provenance=None) -> UqReport:
    v = np.asarray(values, dtype=float)
    mean, std = empirical_stats(v)
    xs, dens = kde_pdf(v)
    _, prob = empirical_cdf(v, xs)
    return UqReport(mean, std, int(v.size), xs, dens, xs.copy(), prob, wall_seconds,
                    analytic, provenance or {})


def _step_cdf(report: UqReport, x: np.ndarray) -> np.ndarray:
    """Evaluate a report's sampled CDF as a right-continuous step function."""
    pos = np.searchsorted(report.cdf_grid, x, side="right") - 1
    out = np.where(pos >= 0, report.cdf[np.clip(pos, 0, None)], 0.0)
    return np.where(x > report.cdf_grid[-1], 1.0, out)


def compare_reports(baseline: UqReport, candidate: UqReport) -> dict:
    """Percent errors in mean and std, and the max CDF gap on the merged grid."""
    if baseline.mean == 0 or baseline.std <= 0:
        raise ZeroBaseline("baseline mean or std is zero")
    grid_x = np.union1d(baseline.cdf_grid, candidate.cdf_grid)
    ks = float(np.max(np.abs(_step_cdf(baseline, grid_x) - _step_cdf(candidate, grid_x))))
    return {
        "mean_error_pct": 100.0 * abs(candidate.mean - baseline.mean) / abs(baseline.mean),
        "std_error_pct": 100.0 * abs(candidate.std - baseline.std) / baseline.std,
        "ks_distance": ks,
    }


def sample_training_design(data, n_train: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Row indices (train, holdout) of a seeded subsample without replacement."""
    n = np.asarray(data).shape[0]
    if n_train > n:
        raise InsufficientData(f"asked for {n_train} training rows from {n}")
    if n_train < 1:
        raise InsufficientData("need at least one training row")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    train = np.sort(perm[:n_train])
    holdout = np.sort(perm[n_train:])
    return train, holdout


def fit_surrogate(train_x, train_y, config: FitConfig | None = None, reference_x=None,
                  provenance: dict | None = None) -> SurrogateModel:
    """Whiten (on ``reference_x``, default the training rows) and fit the sparse expansion."""
    config = config or FitConfig()
    train_x = np.asarray(train_x, dtype=float)
    ref_x = train_x if reference_x is None else np.asarray(reference_x, dtype=float)
    whitener = fit_whitener(ref_x, config.variance_keep)
    return adaptive_fit(
        whitener.transform(train_x),
        np.asarray(train_y, dtype=float),
        config,
        whitener=whitener,
        reference=whitener.transform(ref_x),
        provenance=provenance,
    )


def surrogate_report(model: SurrogateModel, scenarios, provenance=None) -> tuple[UqReport, np.ndarray]:
    """Push every scenario through the surrogate and summarize."""
    start = time.perf_counter()
    values = predict(model, scenarios)
    elapsed = time.perf_counter() - start
    mean, var = analytic_moments(model)
    report = make_report(values, elapsed, {"mean": mean, "std": float(np.sqrt(var))}, provenance)
    return report, values


def monte_carlo(system: grid.PowerSystem, scenarios, threads: int = 1, solver=None,
                provenance=None) -> tuple[UqReport, grid.BatchResult]:
    """Solve every scenario and summarize the optimal costs."""
    start = time.perf_counter()
    result = grid.batch_solve(system, scenarios, threads=threads, solver=solver)
    elapsed = time.perf_counter() - start
    ok = result.optimal_mask
    if ok.sum() < 2:
        raise DegenerateSample(f"only {int(ok.sum())} scenarios solved to optimality")
    prov = dict(provenance or {})
    prov["non_optimal_rows"] = int((~ok).sum())
    return make_report(result.cost[ok], elapsed, provenance=prov), result


@dataclass
class Experiment:
    """Outcome of one surrogate-vs-MC run."""

    n_train: int
    model: SurrogateModel
    report: UqReport
    metrics: dict
    analytic_metrics: dict
    train_seconds: float
    predict_seconds: float


def run_surrogate_experiment(system: grid.PowerSystem, scenarios, mc_costs, mc_report: UqReport,
                             n_train: int, seed: int, config: FitConfig | None = None,
                             solver=None) -> Experiment:
    """Fit on ``n_train`` seeded rows, evaluate on all scenarios, compare with MC.

    Training costs are solved afresh (timed) rather than read from
    ``mc_costs``; ``mc_costs`` only serves as a cross-check.
    """
    scenarios = np.asarray(scenarios, dtype=float)
    train, _ = sample_training_design(scenarios, n_train, seed)
    t0 = time.perf_counter()
    res = grid.batch_solve(system, scenarios[train], solver=solver)
    ok = res.optimal_mask
    model = fit_surrogate(
        scenarios[train][ok],
        res.cost[ok],
        config,
        reference_x=scenarios,
        provenance={"seed": seed, "n_train": int(ok.sum())},
    )
    train_seconds = time.perf_counter() - t0
    if mc_costs is not None:
        np.testing.assert_allclose(res.cost[ok], np.asarray(mc_costs)[train][ok], rtol=1e-9)
    report, _ = surrogate_report(model, scenarios)
    analytic = UqReport(report.analytic["mean"], report.analytic["std"], report.n, report.pdf_grid,
                        report.pdf, report.cdf_grid, report.cdf)
    return Experiment(
        n_train=n_train,
        model=model,
        report=report,
        metrics=compare_reports(mc_report, report),
        analytic_metrics=compare_reports(mc_report, analytic),
        train_seconds=train_seconds,
        predict_seconds=report.wall_seconds,
    )
