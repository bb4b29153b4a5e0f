import math

import numpy as np
import pytest
import scipy.stats

from modassess.distributions import (
    NEG_INF,
    HalfNormal,
    Normal,
    RngStream,
    Uniform,
    log_pdf,
    normal_cdf,
    sample,
)


class TestConstruction:
    def test_uniform_rejects_inverted_bounds(self):
        with pytest.raises(ValueError):
            Uniform(3.0, 3.0)
        with pytest.raises(ValueError):
            Uniform(5.0, 1.0)

    def test_normal_rejects_nonpositive_sigma(self):
        with pytest.raises(ValueError):
            Normal(0.0, 0.0)
        with pytest.raises(ValueError):
            Normal(0.0, -1.0)

    def test_halfnormal_rejects_nonpositive_scale(self):
        with pytest.raises(ValueError):
            HalfNormal(0.0)

    def test_nonfinite_parameters_rejected(self):
        with pytest.raises(ValueError):
            Normal(math.nan, 1.0)
        with pytest.raises(ValueError):
            Uniform(0.0, math.inf)


class TestLogPdf:
    def test_uniform_constant_density(self):
        assert log_pdf(Uniform(0.0, 10.0), 5.0) == pytest.approx(-math.log(10.0))

    def test_standard_normal_at_zero(self):
        # -0.5 * ln(2 pi), evaluated by hand
        assert log_pdf(Normal(0.0, 1.0), 0.0) == pytest.approx(-0.9189385332046727)

    def test_halfnormal_outside_support(self):
        assert log_pdf(HalfNormal(0.1), -0.01) == NEG_INF

    def test_uniform_outside_support(self):
        dist = Uniform(2.0, 3.0)
        assert dist.log_pdf(1.999) == NEG_INF
        assert dist.log_pdf(3.001) == NEG_INF
        assert math.isfinite(dist.log_pdf(2.0))
        assert math.isfinite(dist.log_pdf(3.0))

    def test_neg_inf_propagates_additively(self):
        assert NEG_INF + 123.4 == NEG_INF
        assert NEG_INF + log_pdf(Normal(0, 1), 0.0) == NEG_INF

    def test_matches_direct_density_formula(self):
        # Oracle: scipy.stats densities, 1000 random (dist, x) pairs.
        gen = np.random.default_rng(1234)
        for _ in range(1000):
            kind = gen.integers(3)
            x = gen.uniform(-5.0, 5.0)
            if kind == 0:
                lo = gen.uniform(-3, 0)
                hi = lo + gen.uniform(0.5, 4)
                ours = math.exp(Uniform(lo, hi).log_pdf(x))
                ref = scipy.stats.uniform.pdf(x, loc=lo, scale=hi - lo)
            elif kind == 1:
                mu, sd = gen.uniform(-2, 2), gen.uniform(0.1, 3)
                ours = math.exp(Normal(mu, sd).log_pdf(x))
                ref = scipy.stats.norm.pdf(x, mu, sd)
            else:
                scale = gen.uniform(0.05, 3)
                ours = math.exp(HalfNormal(scale).log_pdf(x))
                ref = scipy.stats.halfnorm.pdf(x, scale=scale)
            assert abs(ours - ref) <= 1e-12

    @pytest.mark.parametrize(
        "dist,grid",
        [
            (Uniform(-1.0, 4.0), np.linspace(-1.0, 4.0, 20001)),
            (Normal(1.5, 0.7), np.linspace(1.5 - 10 * 0.7, 1.5 + 10 * 0.7, 200001)),
            (HalfNormal(0.1), np.linspace(0.0, 1.0, 200001)),
        ],
    )
    def test_density_integrates_to_one(self, dist, grid):
        pdf = np.exp([dist.log_pdf(float(x)) for x in grid])
        assert np.trapezoid(pdf, grid) == pytest.approx(1.0, abs=1e-6)


class TestNormalCdf:
    def test_spot_values(self):
        # Standard normal table / erf oracle
        assert normal_cdf(0.0) == pytest.approx(0.5, abs=1e-15)
        assert normal_cdf(-1.0) == pytest.approx(0.15865525393145707, abs=1e-9)
        assert normal_cdf(1.96) == pytest.approx(0.9750021048517795, abs=1e-9)

    def test_symmetry(self):
        for z in np.linspace(-8, 8, 321):
            assert abs(normal_cdf(-z) - (1.0 - normal_cdf(z))) <= 1e-12

    def test_monotone(self):
        zs = np.linspace(-10, 10, 2001)
        vals = normal_cdf(zs)
        assert np.all(np.diff(vals) >= 0.0)
        assert np.all((vals >= 0.0) & (vals <= 1.0))


class TestSampling:
    def test_uniform_support_containment(self):
        draws = Uniform(2.0, 2.0 + 1e-9).sample(RngStream(0), size=1000)
        assert np.all((draws >= 2.0) & (draws <= 2.0 + 1e-9))

    def test_normal_mean_clt_bound(self):
        draws = Normal(5.0, 2.0).sample(RngStream(7), size=100_000)
        assert abs(draws.mean() - 5.0) <= 4.0 * 2.0 / math.sqrt(100_000)

    def test_halfnormal_nonnegative(self):
        draws = HalfNormal(0.1).sample(RngStream(3), size=10_000)
        assert np.all(draws >= 0.0)
        # moment check: E|N(0, s)| = s sqrt(2/pi)
        assert draws.mean() == pytest.approx(0.1 * math.sqrt(2 / math.pi), rel=0.05)

    def test_sample_module_function(self):
        value = sample(Uniform(0.0, 1.0), RngStream(11))
        assert 0.0 <= value <= 1.0


class TestRngStream:
    def test_equal_streams_bitwise_identical(self):
        a = RngStream(123, 4).generator.standard_normal(1000)
        b = RngStream(123, 4).generator.standard_normal(1000)
        assert np.array_equal(a, b)

    def test_distinct_stream_ids_differ(self):
        a = RngStream(123, 0).generator.standard_normal(100)
        b = RngStream(123, 1).generator.standard_normal(100)
        assert not np.array_equal(a, b)

    def test_invalid_seed_rejected(self):
        with pytest.raises(ValueError):
            RngStream(-1)
        with pytest.raises(ValueError):
            RngStream(2**64)
        with pytest.raises(ValueError):
            RngStream(0, -2)

    def test_cdf_consistency_with_sampling(self):
        # Empirical CDF of HalfNormal draws vs analytic cdf at a few points.
        dist = HalfNormal(0.5)
        draws = dist.sample(RngStream(21), size=200_000)
        for q in (0.1, 0.4, 0.9):
            assert np.mean(draws <= q) == pytest.approx(dist.cdf(q), abs=5e-3)
