"""Acceptance criteria, one test per criterion.

Each test records a ``PASS``/``FAIL`` line (shown in the pytest terminal
summary, and printed directly when run as ``python tests/test_acceptance.py``)
and then asserts. Criterion 10 needs an external data set and is skipped
unless ``SEDPCE_IEEE118_DIR`` points at a converted copy (see
``scripts/fetch_ieee118.py``).
"""
import os
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from oracles import explicit_loo, gram_schmidt_monic, planted_sparse_problem, vertex_enumeration, dc_flows_pinv
from sedpce import grid, io, uq
from sedpce.cli import main as cli_main
from sedpce.gas import solve_ied
from sedpce.orthopoly import UnivariateBasis, monic_orthogonal_coeffs
from sedpce.sparse_fit import FitConfig, loo_error, omp_fit
from sedpce.surrogate import predict
from sedpce.synthetic import multimodal_wind
from sedpce.transforms import raw_moments

N_MC = 10_000
DATA_SEED = 2024
TRAIN_SEED = 0


def record(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_orthopoly_oracle():
    start = time.perf_counter()
    uniform = [1 / (k + 1) if k % 2 == 0 else 0.0 for k in range(11)]
    normal = [float(np.prod(np.arange(k - 1, 0, -2))) if k % 2 == 0 else 0.0 for k in range(11)]
    worst = 0.0
    for mom in (uniform, normal):
        for l, ref in enumerate(gram_schmidt_monic(mom, 5)):
            worst = max(worst, float(np.max(np.abs(monic_orthogonal_coeffs(mom, l) - ref))))
    elapsed = time.perf_counter() - start
    record(1, worst <= 1e-10 and elapsed < 1.0,
           f"Legendre/Hermite l<=5 max coeff error {worst:.2e} (<=1e-10), {elapsed:.3f}s (<1s)")


def test_criterion_02_empirical_orthogonality():
    rng = np.random.default_rng(0)
    pick = rng.random(10_000) < 0.4
    x = np.where(pick, rng.normal(-1.5, 0.5, 10_000), rng.normal(1.0, 0.7, 10_000))
    x = (x - x.mean()) / x.std()
    basis = UnivariateBasis.from_moments(raw_moments(x, 10), 5)
    vals = basis.evaluate(x)
    norms = np.sqrt(np.mean(vals ** 2, axis=0))
    gram = vals.T @ vals / x.size
    rel = gram / np.outer(norms, norms)
    ortho = float(np.max(np.abs(rel - np.diag(np.diag(rel)))))
    mean_zero = float(np.max(np.abs(vals[:, 1:].mean(0)) / norms[1:]))
    record(2, ortho <= 1e-6 and mean_zero <= 1e-6,
           f"bimodal 1e4 sample, D<=5: orthogonality {ortho:.2e}, mean-zero {mean_zero:.2e} (<=1e-6)")


def test_criterion_03_loo_oracle():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(5, 31))
        k = int(rng.integers(1, min(n - 2, 8) + 1))
        a, y = rng.normal(size=(n, k)), rng.normal(size=n)
        ref = explicit_loo(a, y)
        worst = max(worst, abs(loo_error(a, y, normalize=False) - ref) / ref)
    record(3, worst <= 1e-10, f"100 random regressions N<=30: max rel. deviation {worst:.2e} (<=1e-10)")


def test_criterion_04_omp_recovery():
    recovered, coef_ok = 0, 0
    for trial in range(100):
        design, support, coef = planted_sparse_problem(trial)
        # stop once LOO reaches the noise floor (10 sigma^2 relative to var(y))
        exp = omp_fit(design, loo_target=10 * 1e-3 ** 2 / np.var(design.y))
        order = np.argsort(exp.active)
        if np.array_equal(exp.active[order], support):
            recovered += 1
            coef_ok += bool(np.max(np.abs(exp.coefficients[order] - coef)) <= 1e-2)
    record(4, recovered >= 95 and coef_ok == recovered,
           f"planted 5-term support recovered {recovered}/100 (>=95), coefficients within 1e-2 in {coef_ok}")


def test_criterion_05_lp_and_ptdf_oracles():
    from test_lp import dense_problem, enumerate_lp, random_lp
    from test_grid import random_network
    from sedpce import lp

    worst_lp = 0.0
    for seed in range(50):
        c, A, sense, b, lo, hi = random_lp(np.random.default_rng(seed))
        sol = lp.solve(dense_problem(c, A, sense, b, lo, hi))
        ref, _ = enumerate_lp(c, A, sense, b, lo, hi)
        worst_lp = max(worst_lp, abs(sol.objective - ref) / max(1.0, abs(ref)))
    worst_flow = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        system = random_network(rng)
        inj = rng.normal(size=len(system.buses))
        inj -= inj.mean()
        lines = [(system.bus_index[ln.from_bus], system.bus_index[ln.to_bus], ln.reactance) for ln in system.lines]
        worst_flow = max(worst_flow, float(np.max(np.abs(system.ptdf.matrix @ inj
                                                         - dc_flows_pinv(len(system.buses), lines, inj)))))
    record(5, worst_lp <= 1e-8 and worst_flow <= 1e-9,
           f"50 LPs vs vertex enumeration {worst_lp:.2e} (<=1e-8); 20 networks PTDF flow error {worst_flow:.2e} (<=1e-9)")


def test_criterion_06_gas_slp():
    import dataclasses

    from conftest import single_bus
    from test_gas import toy_gas
    from sedpce.gas import GasSystem

    sol = solve_ied(dataclasses.replace(single_bus(), gas=toy_gas()), np.zeros(0))
    g = sol.gas
    five = io.load_system(io.bundled("five_bus.json"))
    empty = dataclasses.replace(five, gas=GasSystem())
    exact = all(
        solve_ied(empty, w).cost == grid.solve_sed(five, w).cost for w in multimodal_wind(20, seed=1)
    )
    ok = g.max_residual <= 1e-6 and g.iterations <= 20 and abs(g.pipeline_flow[0, 0] - 8.0) <= 1e-6 and exact
    record(6, ok, f"toy residual {g.max_residual:.1e} (<=1e-6) in {g.iterations} iterations (<=20); "
                  f"empty gas block exact: {exact}")


@pytest.fixture(scope="module")
def monte_carlo():
    system = io.load_system(io.bundled("five_bus.json"))
    data = multimodal_wind(N_MC, seed=DATA_SEED)
    report, result = uq.monte_carlo(system, data)
    return system, data, report, result


def test_criterion_07_end_to_end(monte_carlo):
    system, data, mc_report, result = monte_carlo
    start = time.perf_counter()
    M = data.shape[1]
    lines, ok = [], result.optimal_mask.all()
    for n_train, std_tol in ((int(2.5 * M), 5.0), (9 * M, 2.0)):
        exp = uq.run_surrogate_experiment(system, data, result.cost, mc_report, n_train, TRAIN_SEED)
        m = exp.metrics
        ok &= m["mean_error_pct"] <= 0.1 and m["std_error_pct"] <= std_tol
        lines.append(f"N={n_train}: mean {m['mean_error_pct']:.3g}% std {m['std_error_pct']:.3g}% "
                     f"(<=0.1%, <={std_tol:g}%)")
    total = mc_report.wall_seconds + time.perf_counter() - start
    ok &= total <= 300
    record(7, bool(ok), "; ".join(lines) + f"; total {total:.0f}s (<=300s)")


def test_criterion_08_speedup(monte_carlo):
    system, data, mc_report, result = monte_carlo
    model = uq.fit_surrogate(data[:72], result.cost[:72], FitConfig(), reference_x=data)
    start = time.perf_counter()
    predict(model, data)
    t_pred = time.perf_counter() - start
    speedup = mc_report.wall_seconds / t_pred
    record(8, speedup >= 10, f"batch_solve {mc_report.wall_seconds:.1f}s vs predict {t_pred:.3f}s: "
                             f"{speedup:.0f}x (>=10x)")


def test_criterion_09_report_invariants(monte_carlo, tmp_path):
    system, data, mc_report, result = monte_carlo
    model = uq.fit_surrogate(data[:20], result.cost[:20], FitConfig(), reference_x=data)
    sur_report, _ = uq.surrogate_report(model, data)
    problems = mc_report.check() + sur_report.check()
    io.save_scenarios(data[:500], tmp_path / "w.csv", system.wind_labels)
    outs = []
    for _ in range(2):
        cli_main(["mc", "--seed", "7", "--system", str(io.bundled("five_bus.json")), "--scenarios",
                  str(tmp_path / "w.csv"), "--sample", "100", "--out", str(tmp_path / "r.json")])
        outs.append((tmp_path / "r.json").read_bytes())
        problems += io.load_report(tmp_path / "r.json").check()
    identical = outs[0] == outs[1]
    record(9, not problems and identical, f"report checks: {problems or 'ok'}; mc --seed rerun identical: {identical}")


def test_criterion_10_external_case():
    root = os.environ.get("SEDPCE_IEEE118_DIR")
    if not root or not (Path(root) / "system.json").exists():
        line = "SKIP criterion 10: external 118-bus data not available (set SEDPCE_IEEE118_DIR)"
        ACCEPTANCE_LINES.append(line)
        pytest.skip(line)
    system = io.load_system(Path(root) / "system.json")
    data = io.load_scenarios(Path(root) / "scenarios.csv", system)
    sample = data[uq.sample_training_design(data, min(2000, len(data)), 0)[0]]
    mc, res = uq.monte_carlo(system, sample, threads=os.cpu_count() or 1,
                             solver=solve_ied if system.gas is not None else None)
    exp = uq.run_surrogate_experiment(system, sample, res.cost, mc, int(2.5 * data.shape[1]), 0,
                                      solver=solve_ied if system.gas is not None else None)
    err = exp.metrics["mean_error_pct"]
    record(10, err <= 0.5, f"external case mean error {err:.3g}% (<=0.5%)")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
