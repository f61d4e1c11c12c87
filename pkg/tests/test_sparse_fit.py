import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sedpce.errors import LeverageOne, RankDeficientActiveSet
from sedpce.sparse_fit import FitConfig, RegressionDesign, adaptive_fit, loo_error, omp_fit
from sedpce.surrogate import predict
from oracles import explicit_loo, planted_sparse_problem


class TestLoo:
    def test_all_ones_column(self):
        assert loo_error(np.ones(3), np.array([1.0, 2.0, 3.0]), normalize=False) == pytest.approx(1.5)
        assert explicit_loo(np.ones(3), np.array([1.0, 2.0, 3.0])) == pytest.approx(1.5)

    def test_exact_fit_is_zero(self):
        a = np.random.default_rng(0).normal(size=(10, 3))
        assert loo_error(a, a @ [1.0, -2.0, 0.5]) == pytest.approx(0.0, abs=1e-20)

    def test_matches_retraining_small(self):
        rng = np.random.default_rng(1)
        a, y = rng.normal(size=(12, 3)), rng.normal(size=12)
        assert loo_error(a, y, normalize=False) == pytest.approx(explicit_loo(a, y), rel=1e-10)

    @given(st.integers(0, 2**31), st.integers(4, 30))
    def test_retraining_property(self, seed, n):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(1, min(n - 2, 6) + 1))
        a, y = rng.normal(size=(n, k)), rng.normal(size=n)
        assert loo_error(a, y, normalize=False) == pytest.approx(explicit_loo(a, y), rel=1e-10)

    def test_interpolating_fit(self):
        with pytest.raises(LeverageOne):
            loo_error(np.eye(3), np.ones(3))


class TestOmp:
    def test_single_atom(self):
        psi = np.random.default_rng(0).normal(size=(40, 10))
        psi[:, 0] = 1.0
        exp = omp_fit(RegressionDesign(psi, 3.0 * psi[:, 5]))
        assert exp.active.tolist() == [5]
        assert exp.coefficients[0] == pytest.approx(3.0)
        assert exp.residual_path[0] <= 1e-12

    @pytest.mark.parametrize("seed", range(5))
    def test_planted_recovery(self, seed):
        design, support, coef = planted_sparse_problem(seed)
        target = 10 * 1e-3 ** 2 / np.var(design.y)
        exp = omp_fit(design, loo_target=target)
        order = np.argsort(exp.active)
        assert np.array_equal(exp.active[order], support)
        assert np.max(np.abs(exp.coefficients[order] - coef)) <= 1e-2

    def test_two_term_signal(self):
        design, _, _ = planted_sparse_problem(0, n_active=1)
        psi = design.psi
        y = 2 * psi[:, 7] - psi[:, 40] + np.random.default_rng(1).normal(0, 1e-3, len(psi))
        exp = omp_fit(RegressionDesign(psi, y), loo_target=10 * 1e-6 / np.var(y))
        assert sorted(exp.active.tolist()) == [7, 40]
        got = dict(zip(exp.active.tolist(), exp.coefficients))
        assert got[7] == pytest.approx(2.0, abs=1e-2) and got[40] == pytest.approx(-1.0, abs=1e-2)

    @given(st.integers(0, 2**31))
    def test_residual_monotone_and_loo_bounds_fit(self, seed):
        rng = np.random.default_rng(seed)
        n, k = int(rng.integers(8, 40)), int(rng.integers(2, 30))
        psi = np.column_stack([np.ones(n), rng.normal(size=(n, k - 1))])
        exp = omp_fit(RegressionDesign(psi, rng.normal(size=n)))
        assert np.all(np.diff(exp.residual_path) <= 1e-12)
        assert exp.relative_error <= exp.loo_error + 1e-12
        assert len(set(exp.active.tolist())) == len(exp.active)
        assert np.all(np.isfinite(exp.coefficients)) and exp.loo_error >= 0

    def test_dependent_column_skipped(self):
        rng = np.random.default_rng(2)
        base = rng.normal(size=(30, 3))
        psi = np.column_stack([np.ones(30), base, base[:, 0]])  # last duplicates column 1
        y = base @ [1.0, 0.5, 0.25] + 0.01 * rng.normal(size=30)
        with pytest.warns(RankDeficientActiveSet):
            exp = omp_fit(RegressionDesign(psi, y), max_terms=5)
        assert 4 not in exp.active

    def test_tie_goes_to_lowest_index(self):
        psi = np.column_stack([np.ones(4), [1.0, -1, 1, -1], [1.0, -1, 1, -1]])
        psi[:, 2] *= 2.0  # same direction, larger scale
        exp = omp_fit(RegressionDesign(psi, np.array([1.0, -1, 1, -1])), max_terms=1)
        assert exp.active.tolist() == [1]


def _planted_inputs(n=300, dims=3, seed=0):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(n, dims))


class TestAdaptive:
    def test_linear_picks_degree_one(self):
        xi = _planted_inputs()
        y = 5.0 + xi @ [1.0, -2.0, 0.5]
        model = adaptive_fit(xi, y, FitConfig(degrees=(1, 2, 3)))
        assert model.degree == 1 and model.loo_error <= 1e-10

    def test_quadratic_picks_degree_two(self):
        xi = _planted_inputs(seed=1)
        y = 1.0 + xi[:, 0] + 0.8 * (xi[:, 1] ** 2 - 1) + 0.5 * xi[:, 0] * xi[:, 2]
        model = adaptive_fit(xi, y, FitConfig(degrees=(1, 2, 3), q_norm=1.0))
        loo = model.provenance["degree_loo"]
        assert model.degree == 2
        assert loo["2"] < loo["1"]
        assert "3" not in loo  # exact at degree 2, so the search stops there

    def test_planted_model_reproduced(self):
        xi = _planted_inputs(n=50, seed=3)
        y = 2.0 + xi[:, 0] - 0.5 * xi[:, 1] * xi[:, 2]
        model = adaptive_fit(xi, y, FitConfig(degrees=(2,), q_norm=1.0))
        np.testing.assert_allclose(predict(model, xi), y, atol=1e-8)

    def test_deterministic_and_permutation_invariant(self):
        xi = _planted_inputs(seed=4)
        y = np.sin(xi[:, 0]) + xi[:, 1] * xi[:, 2]
        cfg = FitConfig(degrees=(1, 2, 3))
        m1, m2 = adaptive_fit(xi, y, cfg), adaptive_fit(xi, y, cfg)
        assert np.array_equal(m1.coefficients, m2.coefficients)
        assert np.array_equal(m1.indices, m2.indices)
        perm = np.random.default_rng(0).permutation(len(y))
        m3 = adaptive_fit(xi[perm], y[perm], cfg)
        np.testing.assert_allclose(predict(m3, xi), predict(m1, xi), rtol=1e-8, atol=1e-8)

    def test_too_few_distinct_values_skips_degree(self):
        xi = np.column_stack([np.tile([0.0, 1.0], 20), np.linspace(-1, 1, 40)])
        y = xi[:, 1] ** 2
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            model = adaptive_fit(xi, y, FitConfig(degrees=(1, 2)))
        assert model.degree == 1
