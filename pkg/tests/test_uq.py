import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from sedpce import uq
from sedpce.errors import InsufficientData, ZeroBaseline
from sedpce.orthopoly import UnivariateBasis, basis_norms
from sedpce.sparse_fit import FitConfig
from sedpce.surrogate import SurrogateModel, analytic_moments, predict
from sedpce.synthetic import multimodal_wind
from sedpce.transforms import Whitener, raw_moments


def report_with(mean, std):
    r = uq.make_report(np.random.default_rng(0).normal(size=200))
    r.mean, r.std = mean, std
    return r


def identity_model(coefficients, indices, moments, degree=1):
    M = np.asarray(indices).shape[1]
    bases = tuple(UnivariateBasis.from_moments(moments, degree) for _ in range(M))
    idx = np.asarray(indices, dtype=np.int64)
    return SurrogateModel(
        whitener=Whitener(np.zeros(M), np.eye(M), np.ones(M), M, 1.0),
        bases=bases, indices=idx, coefficients=np.asarray(coefficients, float),
        norms=basis_norms(bases, idx), degree=degree, loo_error=0.0, relative_error=0.0, n_candidates=len(idx),
    )


class TestStatistics:
    def test_cdf_step(self):
        _, prob = uq.empirical_cdf([1.0, 2.0, 3.0], np.array([2.0]))
        assert prob[0] == pytest.approx(2 / 3)

    def test_kde_standard_normal(self):
        z = np.random.default_rng(0).normal(size=100_000)
        _, dens = uq.kde_pdf(z, np.array([0.0]))
        assert dens[0] == pytest.approx(0.3989, abs=0.02)

    @given(hnp.arrays(float, st.integers(2, 300), elements=st.floats(-1e4, 1e4)))
    def test_report_invariants(self, values):
        if np.ptp(values) == 0:
            values = values + np.arange(values.size)
        r = uq.make_report(values)
        assert r.check() == []
        assert r.std >= 0
        assert uq.compare_reports(r, r)["ks_distance"] == 0.0

    def test_grid_span(self):
        v = np.random.default_rng(1).normal(size=500)
        r = uq.make_report(v)
        h = uq.silverman_bandwidth(v)
        assert r.pdf_grid[0] == pytest.approx(v.min() - 3 * h)
        assert r.pdf_grid[-1] == pytest.approx(v.max() + 3 * h)
        assert len(r.pdf_grid) == 512

    def test_dict_round_trip(self):
        r = uq.make_report(np.arange(10.0))
        r2 = uq.UqReport.from_dict(r.to_dict())
        assert r2.mean == r.mean and np.array_equal(r2.cdf, r.cdf)


class TestCompare:
    def test_std_error_small(self):
        out = uq.compare_reports(report_with(1.0, 4.7069e4), report_with(1.0, 4.7159e4))
        assert out["std_error_pct"] == pytest.approx(1.91e-1, abs=5e-4)

    def test_std_error_large(self):
        out = uq.compare_reports(report_with(1.0, 4.7069e4), report_with(1.0, 5.0379e4))
        assert out["std_error_pct"] == pytest.approx(7.03, abs=5e-3)

    def test_identical(self):
        r = uq.make_report(np.random.default_rng(3).normal(5, 1, 100))
        assert uq.compare_reports(r, r) == {"mean_error_pct": 0.0, "std_error_pct": 0.0, "ks_distance": 0.0}

    def test_zero_baseline(self):
        with pytest.raises(ZeroBaseline):
            uq.compare_reports(report_with(0.0, 1.0), report_with(1.0, 1.0))

    def test_ks_shifted(self):
        a = uq.make_report(np.arange(100.0))
        b = uq.make_report(np.arange(100.0) + 1000)
        assert uq.compare_reports(a, b)["ks_distance"] == pytest.approx(1.0)


class TestTrainingDesign:
    def test_all_rows(self):
        train, hold = uq.sample_training_design(np.zeros((10, 2)), 10, 0)
        assert train.tolist() == list(range(10)) and hold.size == 0

    def test_seeded(self):
        a, _ = uq.sample_training_design(np.zeros((100, 2)), 20, 7)
        b, _ = uq.sample_training_design(np.zeros((100, 2)), 20, 7)
        assert np.array_equal(a, b) and len(set(a.tolist())) == 20 and a.max() < 100

    def test_too_many(self):
        with pytest.raises(InsufficientData):
            uq.sample_training_design(np.zeros((5, 2)), 6, 0)


class TestSurrogate:
    def test_constant_model(self):
        m = identity_model([5.0], [[0, 0]], [1.0, 0.0, 1.0])
        np.testing.assert_array_equal(predict(m, np.random.default_rng(0).normal(size=(7, 2))), 5.0)
        assert analytic_moments(identity_model([7.0], [[0]], [1.0, 0.0, 1.0])) == (7.0, 0.0)

    def test_linear_model_variance(self):
        z = np.random.default_rng(0).normal(size=1_000_000)
        m = identity_model([1.0, 2.0], [[0], [1]], raw_moments(z, 2))
        mean, var = analytic_moments(m)
        assert var == pytest.approx(4.0, rel=0.02)
        assert var == pytest.approx(np.var(predict(m, z[:, None])), rel=0.02)
        assert mean == pytest.approx(1.0)

    def test_unselected_terms_do_not_matter(self):
        mom = [1.0, 0.0, 1.0, 0.0, 3.0]
        a = identity_model([1.0, 2.0], [[0, 0], [1, 0]], mom, degree=2)
        b = identity_model([1.0, 2.0, 0.0], [[0, 0], [1, 0], [1, 1]], mom, degree=2)
        x = np.random.default_rng(1).normal(size=(20, 2))
        np.testing.assert_allclose(predict(a, x), predict(b, x), rtol=0, atol=1e-15)

    def test_analytic_mean_matches_pushed_through_sample(self):
        data = multimodal_wind(3000, seed=11)
        y = 100 + data @ np.linspace(-1, 1, data.shape[1]) + 1e-3 * (data[:, 0] - 50) ** 2
        model = uq.fit_surrogate(data[:200], y[:200], FitConfig(degrees=(1, 2)), reference_x=data)
        report, values = uq.surrogate_report(model, data)
        assert report.analytic["mean"] == pytest.approx(values.mean(), rel=1e-6)
        assert report.check() == []

    def test_fit_is_deterministic(self):
        data = multimodal_wind(500, seed=12)
        y = data.sum(1) + 0.01 * data[:, 1] * data[:, 3]
        m1 = uq.fit_surrogate(data[:100], y[:100], reference_x=data)
        m2 = uq.fit_surrogate(data[:100], y[:100], reference_x=data)
        assert m1.to_dict() == m2.to_dict()
