import math

import numpy as np
import pytest

from modassess.deterioration import (
    LogisticParams,
    PowerLawParams,
    logistic_dtau,
    powerlaw_dtau,
)
from modassess.errors import SingularityError


class TestLogistic:
    def test_sigmoid_midpoint(self):
        for beta in (-0.5, 0.0, 2.0):
            assert logistic_dtau(LogisticParams(0.0, beta, 1.0), 0.0) == 0.5

    def test_asymptote(self):
        p = LogisticParams(0.0, 1.0, 0.8)
        assert logistic_dtau(p, 1e6) == pytest.approx(0.8, abs=1e-15)
        assert logistic_dtau(p, -1e6) == pytest.approx(0.0, abs=1e-15)

    def test_reference_value(self):
        # 1 / (1 + e^-1.1), hand evaluation
        value = logistic_dtau(LogisticParams(0.1, 0.01, 1.0), 100.0)
        assert value == pytest.approx(1.0 / (1.0 + math.exp(-1.1)), rel=1e-12)
        assert value == pytest.approx(0.75026, abs=1e-5)

    def test_stable_at_extreme_arguments(self):
        p = LogisticParams(0.0, 1.0, 1.0)
        with np.errstate(over="raise"):
            assert logistic_dtau(p, 700.0) == pytest.approx(1.0)
            assert logistic_dtau(p, -700.0) == pytest.approx(0.0)

    def test_half_value_where_argument_vanishes(self):
        p = LogisticParams(0.3, 0.02, 1.4)
        t_star = -p.alpha / p.beta
        assert logistic_dtau(p, t_star) == 0.7

    def test_range_and_monotonicity(self):
        p = LogisticParams(-1.0, 0.005, 1.2)
        t = np.linspace(-2000.0, 3000.0, 1000)
        vals = logistic_dtau(p, t)
        assert np.all((vals >= 0.0) & (vals <= p.gamma))
        assert np.all(np.diff(vals) >= 0.0)

    def test_negative_gamma_rejected(self):
        with pytest.raises(ValueError):
            LogisticParams(0.0, 1.0, -0.1)


class TestPowerLaw:
    def test_zero_at_initiation(self):
        p = PowerLawParams(0.6, 1.0, t0=200.0, dt_ts=900.0)
        assert powerlaw_dtau(p, 200.0) == 0.0

    def test_linear_reference_value(self):
        # 0.6 / 900 * 450 = 0.3
        p = PowerLawParams(0.6, 1.0, t0=200.0, dt_ts=900.0)
        assert powerlaw_dtau(p, 650.0) == pytest.approx(0.3, rel=1e-12)

    def test_sqrt_reference_value(self):
        # 0.6 / 900 * sqrt(900) = 0.02
        p = PowerLawParams(0.6, 0.5, t0=200.0, dt_ts=900.0)
        assert powerlaw_dtau(p, 1100.0) == pytest.approx(0.02, rel=1e-12)

    def test_before_initiation_rejected(self):
        p = PowerLawParams(0.6, 1.0, t0=200.0, dt_ts=900.0)
        with pytest.raises(ValueError):
            powerlaw_dtau(p, 199.9)

    def test_initiation_singularity_for_nonpositive_exponent(self):
        for beta in (0.0, -0.5):
            p = PowerLawParams(0.6, beta, t0=200.0, dt_ts=900.0)
            with pytest.raises(SingularityError):
                powerlaw_dtau(p, 200.0)
            # away from t0 the law is fine
            assert math.isfinite(powerlaw_dtau(p, 300.0))

    def test_linear_in_alpha(self):
        t = np.linspace(200.0, 1300.0, 1000)
        a = powerlaw_dtau(PowerLawParams(0.4, 0.7, 200.0, 900.0), t)
        b = powerlaw_dtau(PowerLawParams(0.8, 0.7, 200.0, 900.0), t)
        assert np.array_equal(b, 2.0 * a)

    def test_nondecreasing_for_positive_exponent(self):
        t = np.linspace(200.0, 1300.0, 1000)
        vals = powerlaw_dtau(PowerLawParams(0.6, 1.3, 200.0, 900.0), t)
        assert np.all(np.diff(vals) >= 0.0)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            PowerLawParams(0.6, 1.0, t0=-1.0, dt_ts=900.0)
        with pytest.raises(ValueError):
            PowerLawParams(0.6, 1.0, t0=0.0, dt_ts=0.0)
