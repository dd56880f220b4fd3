import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import special
from scipy import stats as sps

from stockcycles import rng
from stockcycles.errors import DegenerateError, ParamError, TooShortError
from stockcycles.ingest import MonthlySeries, SampledSeries, YearMonth
from stockcycles.spectral import periodogram
from stockcycles.stats import (
    AcfResult,
    acf,
    box_pierce,
    chi2_sf,
    first_differences,
    gammaincc,
    jarque_bera,
    kolmogorov_sf,
    ks_test_normal,
    ljung_box,
    max_share,
    simulate_random_walk,
    simulate_white_noise,
    white_noise_max_share_envelope,
)

# upper 5% and 1% points of chi-square, from printed tables
CHI2_TABLE = [
    (1, 3.841458820694124, 0.05),
    (2, 5.991464547107979, 0.05),
    (10, 18.307038053275146, 0.05),
    (24, 36.41502850180731, 0.05),
    (24, 42.97982013935165, 0.01),
]


class TestTailProbabilities:
    @pytest.mark.parametrize("dof,quantile,alpha", CHI2_TABLE)
    def test_tabulated_quantiles(self, dof, quantile, alpha):
        assert chi2_sf(quantile, dof) == pytest.approx(alpha, abs=1e-10)

    @settings(max_examples=300)
    @given(st.floats(0.05, 200.0), st.floats(0.0, 400.0))
    def test_gammaincc_against_scipy(self, a, x):
        assert abs(gammaincc(a, x) - special.gammaincc(a, x)) < 1e-10

    def test_edges(self):
        assert gammaincc(3.0, 0.0) == 1.0
        assert gammaincc(3.0, math.inf) == 0.0
        assert chi2_sf(0.0, 5) == 1.0
        with pytest.raises(ParamError):
            gammaincc(0.0, 1.0)
        with pytest.raises(ParamError):
            chi2_sf(1.0, 0)

    @pytest.mark.parametrize("lam", [0.2, 0.5, 0.8, 1.0, 1.18, 1.36, 1.63, 2.5, 4.0])
    def test_kolmogorov(self, lam):
        assert kolmogorov_sf(lam) == pytest.approx(sps.kstwobign.sf(lam), abs=1e-9)


class TestDifferences:
    def test_examples(self):
        np.testing.assert_array_equal(first_differences(np.array([1.0, 1, 1])), [0, 0])
        np.testing.assert_array_equal(first_differences(np.array([0.0, 1, 3, 6])), [1, 2, 3])

    def test_monthly_keeps_dates(self):
        out = first_differences(MonthlySeries(YearMonth(1960, 1), [1.0, 4.0, 9.0]))
        assert out.start == YearMonth(1960, 2)
        np.testing.assert_array_equal(out.values, [3, 5])

    def test_too_short(self):
        with pytest.raises(TooShortError):
            first_differences(np.array([1.0]))

    def test_walk_differences_recover_noise(self):
        walk = simulate_random_walk(500, sigma=0.7, seed=11)
        noise = 0.7 * rng.standard_normal(499, 11)
        np.testing.assert_allclose(first_differences(walk).values, noise, rtol=0, atol=1e-12)


class TestAcf:
    def test_lag_zero(self):
        assert acf(np.array([1.0, 3.0, 2.0, 7.0]), 2).rho[0] == 1.0

    def test_alternating_closed_form(self):
        x = np.array([(-1.0) ** t for t in range(100)])
        # mean is zero for even n, so rho_1 = -(n-1)/n exactly
        assert acf(x, 1).rho[1] == pytest.approx(-0.99, abs=1e-15)

    def test_matches_direct_formula(self):
        x = np.random.default_rng(2).normal(size=57)
        d = x - x.mean()
        expected = [d[: d.size - k] @ d[k:] / (d @ d) for k in range(11)]
        np.testing.assert_allclose(acf(x, 10).rho, expected, rtol=1e-12)

    def test_white_noise_band(self):
        inside = []
        for seed in range(50):
            r = acf(simulate_white_noise(1000, seed=seed), 20)
            inside.extend(np.abs(r.rho[1:]) < r.band())
        assert 0.92 <= np.mean(inside) <= 0.98

    def test_errors(self):
        with pytest.raises(DegenerateError):
            acf(np.full(10, 2.0), 3)
        with pytest.raises(ParamError):
            acf(np.arange(5.0), 5)
        with pytest.raises(ParamError):
            acf(SampledSeries(np.array([0.0, 1, 3, 4]), np.array([1.0, 2, 3, 5])), 1)


class TestPortmanteau:
    def test_statistics_by_hand(self):
        x = np.random.default_rng(4).normal(size=80)
        r = acf(x, 6)
        n = 80
        bp = n * np.sum(r.rho[1:7] ** 2)
        lb = n * (n + 2) * np.sum(r.rho[1:7] ** 2 / (n - np.arange(1, 7)))
        assert box_pierce(r, 6).statistic == pytest.approx(bp, rel=1e-12)
        assert ljung_box(r, 6).statistic == pytest.approx(lb, rel=1e-12)
        assert ljung_box(r, 6).p_value == pytest.approx(sps.chi2.sf(lb, 6), abs=1e-10)
        assert ljung_box(r, 6).dof == 6

    def test_zero_autocorrelation(self):
        r = AcfResult(np.arange(5), np.array([1.0, 0, 0, 0, 0]), 100)
        report = ljung_box(r, 4)
        assert report.statistic == 0.0 and report.p_value == 1.0

    def test_cosine_rejects(self):
        t = np.arange(256)
        r = acf(np.cos(2 * np.pi * t / 40), 24)
        assert ljung_box(r).p_value < 1e-3
        assert box_pierce(r).p_value < 1e-3

    def test_h_validation(self):
        r = acf(np.random.default_rng(0).normal(size=50), 10)
        for h in (0, -1, 11):
            with pytest.raises(ParamError):
                ljung_box(r, h)

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, st.integers(30, 120), elements=st.floats(-100, 100)), st.integers(1, 20))
    def test_ljung_box_dominates_box_pierce(self, x, h):
        if np.std(x) <= 1e-6 * max(1.0, np.abs(x).max()):
            return
        r = acf(x, h)
        assert ljung_box(r, h).statistic >= box_pierce(r, h).statistic

    def test_report_json(self):
        report = ljung_box(acf(simulate_white_noise(100), 10), 10)
        assert set(json.loads(report.to_json())) == {"test_name", "statistic", "dof", "p_value"}
        assert 0.0 <= report.p_value <= 1.0

    def test_size_over_many_series(self):
        # seed-robust check of the 5% level with 10 000 series
        hits = sum(ljung_box(acf(simulate_white_noise(256, seed=s), 24), 24).p_value < 0.05
                   for s in range(10_000))
        assert 0.03 <= hits / 10_000 <= 0.07

    def test_walk_differences_rarely_reject(self):
        kept = sum(ljung_box(acf(first_differences(simulate_random_walk(300, seed=s)), 24)).p_value > 0.05
                   for s in range(200))
        assert kept >= 0.9 * 200


class TestNormality:
    def test_jarque_bera_formula(self):
        x = np.random.default_rng(8).gamma(2.0, size=300)
        ours = jarque_bera(x)
        ref = sps.jarque_bera(x)
        assert ours.statistic == pytest.approx(ref.statistic, rel=1e-10)
        assert ours.p_value == pytest.approx(ref.pvalue, abs=1e-10)
        assert ours.dof == 2

    def test_ks_statistic(self):
        x = np.random.default_rng(9).normal(3, 2, size=200)
        ours = ks_test_normal(x)
        ref = sps.kstest(x, "norm", args=(x.mean(), x.std(ddof=1)))
        assert ours.statistic == pytest.approx(ref.statistic, rel=1e-10)
        assert ours.p_value == pytest.approx(sps.kstwobign.sf(ref.statistic * math.sqrt(200)), abs=0.05)

    def test_jb_gaussian_calibration(self):
        ok = sum(jarque_bera(simulate_white_noise(500, seed=s).values).p_value > 0.05 for s in range(500))
        assert ok >= 0.9 * 500

    def test_jb_rejects_uniform(self):
        rejects = sum(jarque_bera(rng.uniforms(500, s)).p_value < 0.01 for s in range(200))
        assert rejects >= 0.95 * 200

    def test_degenerate_and_short(self):
        with pytest.raises(DegenerateError):
            jarque_bera(np.full(20, 1.5))
        with pytest.raises(DegenerateError):
            ks_test_normal(np.full(20, 1.5))
        with pytest.raises(TooShortError):
            jarque_bera(np.arange(7.0))


class TestSimulation:
    def test_determinism(self):
        a = simulate_random_walk(300, 1.3, seed=5)
        b = simulate_random_walk(300, 1.3, seed=5)
        assert a.values.tobytes() == b.values.tobytes()
        assert simulate_white_noise(50, seed=1).values.tobytes() != simulate_white_noise(50, seed=2).values.tobytes()

    def test_documented_stream(self):
        # regenerate from the documented recipe with a fresh Philox instance
        raw = np.random.Philox(key=42, counter=0).random_raw(4)
        u = ((raw >> np.uint64(11)).astype(float) + 1.0) * 2.0**-53
        r = np.sqrt(-2 * np.log(u[0::2]))
        expected = np.ravel(np.column_stack([r * np.cos(2 * np.pi * u[1::2]), r * np.sin(2 * np.pi * u[1::2])]))
        np.testing.assert_array_equal(simulate_white_noise(4, seed=42).values, expected)
        assert rng.describe(42)["generator"] == rng.GENERATOR

    def test_walk_starts_at_zero(self):
        walk = simulate_random_walk(10, seed=0)
        assert walk.values[0] == 0.0 and len(walk) == 10

    def test_small_sigma_envelope(self):
        n, sigma = 400, 1e-9
        inside = sum(np.max(np.abs(simulate_random_walk(n, sigma, seed=s).values)) <= 5 * sigma * math.sqrt(n)
                     for s in range(200))
        assert inside >= 199

    def test_clt_mean(self):
        n = 100_000
        x = simulate_white_noise(n, sigma=2.0, seed=3).values
        assert abs(x.mean()) < 4 * 2.0 / math.sqrt(n)
        assert x.std() == pytest.approx(2.0, rel=0.02)

    def test_uniforms_in_unit_interval(self):
        u = rng.uniforms(100_000, 0)
        assert u.min() > 0.0 and u.max() <= 1.0

    @pytest.mark.parametrize("n,sigma", [(0, 1.0), (10, 0.0), (10, -1.0)])
    def test_validation(self, n, sigma):
        with pytest.raises(ParamError):
            simulate_white_noise(n, sigma)


class TestFlatness:
    def test_white_noise_periodogram_is_flat(self):
        n = 512
        limit = 10 * math.log(n) / n
        flat = 0
        for seed in range(200):
            spec = periodogram(simulate_white_noise(n, seed=seed))
            flat += spec.shares().max() <= limit
        assert flat >= 0.95 * 200

    def test_envelope(self):
        env = white_noise_max_share_envelope(256, 0.99, n_sim=300, seed=1)
        assert 0 < env < 10 * math.log(256) / 256
        assert env == white_noise_max_share_envelope(256, 0.99, n_sim=300, seed=1)
        t = np.arange(256)
        assert max_share(np.cos(2 * np.pi * t / 32)) > env
