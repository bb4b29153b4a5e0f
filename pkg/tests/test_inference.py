import math

import numpy as np
import pytest

from modassess.distributions import NEG_INF, HalfNormal, Normal, RngStream, Uniform
from modassess.errors import ConfigError, InitializationError
from modassess.inference import (
    ConvergenceReport,
    ParameterSpace,
    PosteriorDraws,
    TaskSpec,
    log_posterior,
    make_log_posterior,
    map_estimate,
    parameter_space,
    posterior_predictive,
    predict_draws,
    run_mcmc,
    split_rhat,
)
from modassess.series import StrainSeries
from modassess.structural import Geometry, ModelCandidate, beam_strain

GEOM = Geometry()


def analytical_candidate(e_map=None, dtau_max=1.0):
    return ModelCandidate(
        id="M1", kind="analytical", dtau_max=dtau_max, geometry=GEOM, e_map=e_map
    )


def emulator_candidate(e_map=None, dtau_max=1.4, kappa_eps=0.8, kappa_sig=2.2):
    return ModelCandidate(
        id="M3", kind="emulator", dtau_max=dtau_max, kappa_eps=kappa_eps,
        kappa_sig=kappa_sig, geometry=GEOM, e_map=e_map, is_oracle=True,
    )


class TestTaskSpec:
    def test_names(self):
        assert TaskSpec("sysid").name == "sysid"
        assert TaskSpec("prognosis", "powerlaw").name == "prognosis-powerlaw"

    def test_validation(self):
        with pytest.raises(ConfigError):
            TaskSpec("forecasting")
        with pytest.raises(ConfigError):
            TaskSpec("prognosis")
        with pytest.raises(ConfigError):
            TaskSpec("sysid", deterioration="logistic")


class TestParameterSpaces:
    def test_sysid_priors(self):
        space = parameter_space(TaskSpec("sysid"), analytical_candidate())
        assert space.names == ("e_gpa", "sigma")
        assert space.priors[0] == Uniform(170.0, 238.0)
        assert space.priors[1] == Uniform(0.0, 10.0)

    def test_diagnosis_priors(self):
        space = parameter_space(TaskSpec("diagnosis"), emulator_candidate(e_map=200.0))
        assert space.names == ("dtau", "sigma")
        assert space.priors[0] == Uniform(0.0, 1.4)

    def test_prognosis_logistic_priors(self):
        space = parameter_space(
            TaskSpec("prognosis", "logistic"), emulator_candidate(e_map=200.0)
        )
        assert space.names == ("alpha", "beta", "gamma", "sigma")
        assert space.priors[0] == HalfNormal(0.1)
        assert space.priors[1] == Normal(0.0, 1.0)
        assert space.priors[2] == Uniform(0.0, 1.4)

    def test_prognosis_powerlaw_priors(self):
        space = parameter_space(
            TaskSpec("prognosis", "powerlaw"), emulator_candidate(e_map=200.0)
        )
        assert space.names == ("alpha", "beta", "sigma")
        assert space.priors[0] == Uniform(0.1, 1.5)
        assert space.priors[1] == Uniform(-1.5, 1.5)


class TestLogPosterior:
    def test_sigma_outside_support(self):
        cand = analytical_candidate()
        task = TaskSpec("sysid")
        data = StrainSeries([0.0, 1.0], [-390.0, -390.0])
        for sigma in (-1.0, 0.0, 10.5):
            assert log_posterior(task, cand, data, [200.0, sigma]) == NEG_INF

    def test_perfect_fit_hand_value(self):
        # Two zero-residual points at sigma=1: 2 * (-0.5 ln 2pi) plus the
        # uniform prior constants.
        cand = analytical_candidate()
        task = TaskSpec("sysid")
        pred = beam_strain(GEOM, 200.0, 0.0)
        data = StrainSeries([0.0, 1.0], [pred, pred])
        expected = 2 * (-0.9189385332046727) - math.log(238.0 - 170.0) - math.log(10.0)
        assert log_posterior(task, cand, data, [200.0, 1.0]) == pytest.approx(expected)

    def test_sysid_ignores_phases(self):
        cand = analytical_candidate()
        task = TaskSpec("sysid")
        strain = beam_strain(GEOM, 210.0, 0.0)
        with_phases = StrainSeries([0.0, 500.0, 1200.0], [strain] * 3, [1, 2, 3])
        without = StrainSeries([0.0, 500.0, 1200.0], [strain] * 3)
        theta = [210.0, 2.0]
        assert log_posterior(task, cand, with_phases, theta) == log_posterior(
            task, cand, without, theta
        )

    def test_dimension_mismatch(self):
        cand = analytical_candidate()
        target = make_log_posterior(TaskSpec("sysid"), cand, StrainSeries([0, 1], [1, 2]))
        with pytest.raises(ValueError):
            target([200.0, 1.0, 3.0])

    def test_prognosis_requires_e_map(self):
        cand = analytical_candidate(e_map=None)
        with pytest.raises(ConfigError):
            make_log_posterior(
                TaskSpec("prognosis", "powerlaw"), cand, StrainSeries([300, 400], [1, 2])
            )

    def test_decomposition_against_brute_force(self):
        # log-posterior minus priors equals a directly coded Gaussian sum.
        gen = np.random.default_rng(99)
        cand = emulator_candidate(e_map=205.0)
        task = TaskSpec("prognosis", "powerlaw", t0=200.0, dt_ts=900.0)
        times = np.linspace(250.0, 790.0, 41)
        data = StrainSeries(times, gen.normal(-450.0, 5.0, times.size))
        target = make_log_posterior(task, cand, data)
        space = target.space
        for _ in range(100):
            # sigma is kept away from 0 so |loglik| stays below ~1e5 and the
            # 1e-10 absolute tolerance is meaningful in double precision
            theta = np.array([
                gen.uniform(0.1, 1.5), gen.uniform(-1.5, 1.5), gen.uniform(2.0, 9.9),
            ])
            total = target(theta)
            prior = sum(p.log_pdf(v) for p, v in zip(space.priors, theta))
            dtau = np.clip(
                theta[0] / 900.0 * (times - 200.0) ** theta[1], 0.0, cand.dtau_max
            )
            from modassess.structural import emulator_strain

            pred = emulator_strain(GEOM, 0.8, 205.0, dtau)
            loglik = sum(
                -0.5 * math.log(2 * math.pi * theta[2] ** 2)
                - (r := data.strains[i] - pred[i]) * r / (2 * theta[2] ** 2)
                for i in range(times.size)
            )
            assert total - prior == pytest.approx(loglik, abs=1e-10)

    def test_powerlaw_t0_excluded_for_nonpositive_beta(self):
        cand = emulator_candidate(e_map=205.0)
        task = TaskSpec("prognosis", "powerlaw", t0=200.0, dt_ts=900.0)
        times = np.array([200.0, 300.0, 400.0])
        data = StrainSeries(times, np.full(3, -450.0))
        target = make_log_posterior(task, cand, data)
        value = target([0.5, -0.5, 2.0])
        assert math.isfinite(value)


class TestRunMcmc:
    def test_prior_only_target(self):
        space = ParameterSpace(("x",), (Normal(0.0, 1.0),))
        post, report = run_mcmc(
            lambda t: Normal(0.0, 1.0).log_pdf(t[0]),
            space, n_chains=4, n_warmup=500, n_samples=1000, seed=12,
        )
        n_pos = len(post)
        assert n_pos == 4000
        # effective-sample slack factor of 10 on the iid CLT bound
        assert abs(post.column("x").mean()) <= 4.0 * math.sqrt(10.0 / n_pos)
        assert report.passed

    def test_conjugate_posterior(self):
        # prior N(0,1), one observation y=1 with unit noise -> N(0.5, sqrt(0.5))
        space = ParameterSpace(("mu",), (Normal(0.0, 1.0),))

        def target(theta):
            mu = theta[0]
            return -0.5 * mu * mu - 0.5 * (1.0 - mu) ** 2

        post, report = run_mcmc(target, space, n_chains=8, n_warmup=2000,
                                n_samples=2000, seed=5)
        assert post.column("mu").mean() == pytest.approx(0.5, abs=0.03)
        assert post.column("mu").std() == pytest.approx(math.sqrt(0.5), abs=0.03)
        assert report.passed

    def test_determinism(self):
        space = ParameterSpace(("x", "s"), (Uniform(-2, 2), Uniform(0, 10)))

        def target(theta):
            if not (-2 <= theta[0] <= 2 and 0 < theta[1] <= 10):
                return NEG_INF
            return -0.5 * theta[0] ** 2 - 0.5 * (theta[1] - 3.0) ** 2

        a, _ = run_mcmc(target, space, n_chains=2, n_warmup=200, n_samples=150, seed=77)
        b, _ = run_mcmc(target, space, n_chains=2, n_warmup=200, n_samples=150, seed=77)
        assert np.array_equal(a.draws, b.draws)
        assert np.array_equal(a.log_posterior, b.log_posterior)
        c, _ = run_mcmc(target, space, n_chains=2, n_warmup=200, n_samples=150, seed=78)
        assert not np.array_equal(a.draws, c.draws)

    def test_acceptance_rate_window(self):
        space = ParameterSpace(("x",), (Normal(0.0, 1.0),))
        post, _ = run_mcmc(
            lambda t: Normal(0.0, 1.0).log_pdf(t[0]),
            space, n_chains=4, n_warmup=1000, n_samples=1000, seed=3,
        )
        for rate in post.accept_rates:
            assert 0.15 <= rate <= 0.55

    def test_initialization_failure(self):
        space = ParameterSpace(("x",), (Uniform(0.0, 1.0),))
        with pytest.raises(InitializationError):
            run_mcmc(lambda t: NEG_INF, space, n_chains=2, n_warmup=100,
                     n_samples=100, seed=0)

    def test_settings_validation(self):
        space = ParameterSpace(("x",), (Normal(0.0, 1.0),))
        target = lambda t: Normal(0.0, 1.0).log_pdf(t[0])
        with pytest.raises(ValueError):
            run_mcmc(target, space, n_chains=1, n_warmup=100, n_samples=100)
        with pytest.raises(ValueError):
            run_mcmc(target, space, n_chains=2, n_warmup=99, n_samples=100)

    def test_every_draw_has_finite_log_posterior(self):
        space = ParameterSpace(("x",), (Uniform(-1.0, 1.0),))

        def target(theta):
            if abs(theta[0]) > 1:
                return NEG_INF
            return 0.0

        post, _ = run_mcmc(target, space, n_chains=2, n_warmup=100, n_samples=100, seed=1)
        assert np.all(np.isfinite(post.log_posterior))
        assert np.all(np.abs(post.draws) <= 1.0)


def reference_split_rhat(chains):
    """Independent re-implementation of the published estimator, slow loops."""
    import scipy.stats

    halves = []
    n = len(chains[0])
    half = n // 2
    for c in chains:
        halves.append(np.asarray(c[:half], dtype=float))
        halves.append(np.asarray(c[n - half:], dtype=float))
    pooled = np.concatenate(halves)
    ranks = scipy.stats.rankdata(pooled)
    z = scipy.stats.norm.ppf((ranks - 3.0 / 8.0) / (len(pooled) + 0.25))
    zs = [z[i * half:(i + 1) * half] for i in range(len(halves))]
    m = len(zs)
    means = [np.mean(c) for c in zs]
    w = np.mean([np.var(c, ddof=1) for c in zs])
    b = half * np.var(means, ddof=1)
    var_plus = (half - 1) / half * w + b / half
    return math.sqrt(var_plus / w)


class TestSplitRhat:
    def test_iid_chains_near_one(self):
        gen = np.random.default_rng(2024)
        chains = [gen.standard_normal(1000) for _ in range(4)]
        value = split_rhat(chains)
        assert 0.999 <= value <= 1.01
        assert value == pytest.approx(reference_split_rhat(chains), rel=1e-12)

    def test_constant_chains_return_one(self):
        assert split_rhat([np.full(100, 5.0), np.full(100, 5.0)]) == 1.0

    def test_disjoint_chains_blow_up(self):
        # Rank normalization bounds how far R-hat can grow (fully disjoint
        # pairs land near 2), but disjoint chains must decisively fail the
        # 1.01 convergence gate.
        gen = np.random.default_rng(7)
        chains = [gen.standard_normal(500), gen.standard_normal(500) + 10.0]
        value = split_rhat(chains)
        assert value > 1.5
        four = [gen.standard_normal(500) + 10.0 * k for k in range(4)]
        assert split_rhat(four) > 1.5

    def test_too_few_draws(self):
        with pytest.raises(ValueError):
            split_rhat([np.arange(3), np.arange(3)])
        with pytest.raises(ValueError):
            split_rhat([np.arange(10)])

    def test_odd_lengths_drop_middle(self):
        gen = np.random.default_rng(3)
        chains = [gen.standard_normal(101) for _ in range(4)]
        assert math.isfinite(split_rhat(chains))

    def test_matches_reference_on_fuzz(self):
        gen = np.random.default_rng(11)
        for _ in range(20):
            m = int(gen.integers(2, 6))
            n = int(gen.integers(8, 200))
            chains = [gen.standard_normal(n) * gen.uniform(0.5, 2)
                      + gen.uniform(-1, 1) for _ in range(m)]
            assert split_rhat(chains) == pytest.approx(
                reference_split_rhat(chains), rel=1e-12
            )


def tiny_posterior(draws, lps=None, names=("x",)):
    draws = np.atleast_2d(np.asarray(draws, dtype=float))
    if draws.shape[0] == 1 and len(names) == 1 and draws.shape[1] > 1:
        draws = draws.T
    n = len(draws)
    return PosteriorDraws(
        draws=draws,
        names=names,
        log_posterior=np.zeros(n) if lps is None else np.asarray(lps, dtype=float),
        chain_ids=np.zeros(n, dtype=int),
    )


class TestMapEstimate:
    def test_argmax(self):
        post = tiny_posterior([[1.0], [2.0], [3.0]], lps=[-3.0, -1.0, -2.0])
        assert map_estimate(post)[0] == 2.0

    def test_tie_breaks_to_first(self):
        post = tiny_posterior([[1.0], [2.0]], lps=[-1.0, -1.0])
        assert map_estimate(post)[0] == 1.0

    def test_single_draw(self):
        post = tiny_posterior([[4.2]], lps=[-0.5])
        assert map_estimate(post)[0] == 4.2

    def test_empty_posterior_rejected(self):
        post = PosteriorDraws(
            draws=np.empty((0, 1)), names=("x",),
            log_posterior=np.empty(0), chain_ids=np.empty(0, dtype=int),
        )
        with pytest.raises(ValueError):
            map_estimate(post)


class TestPosteriorCsv:
    def test_round_trip(self, tmp_path):
        gen = np.random.default_rng(0)
        post = PosteriorDraws(
            draws=gen.standard_normal((40, 2)),
            names=("a", "b"),
            log_posterior=gen.standard_normal(40),
            chain_ids=np.repeat([0, 1], 20),
        )
        path = tmp_path / "post.csv"
        post.to_csv(path)
        loaded = PosteriorDraws.from_csv(path)
        assert np.array_equal(loaded.draws, post.draws)
        assert np.array_equal(loaded.log_posterior, post.log_posterior)
        assert np.array_equal(loaded.chain_ids, post.chain_ids)
        assert loaded.names == post.names


class TestPosteriorPredictive:
    def test_degenerate_zero_noise(self):
        cand = emulator_candidate(e_map=200.0)
        task = TaskSpec("diagnosis")
        post = tiny_posterior([[0.5, 0.0]], names=("dtau", "sigma"))
        bands = posterior_predictive(task, cand, post, [1150.0, 1200.0],
                                     n_rep=200, rng=RngStream(1))
        pred, _ = predict_draws(task, cand, np.array([1150.0]), post.draws)
        expect = float(pred[0, 0])
        assert np.allclose(bands.mean, expect)
        assert np.allclose(bands.lower95, expect)
        assert np.allclose(bands.upper95, expect)

    def test_degenerate_noise_level(self):
        cand = emulator_candidate(e_map=200.0)
        task = TaskSpec("diagnosis")
        post = tiny_posterior([[0.5, 2.0]], names=("dtau", "sigma"))
        bands = posterior_predictive(task, cand, post, np.linspace(1100, 1300, 5),
                                     n_rep=1000, rng=RngStream(2))
        sds = bands.samples.std(axis=0)
        assert np.all(np.abs(sds - 2.0) <= 0.2)

    def test_band_ordering(self):
        cand = emulator_candidate(e_map=200.0)
        task = TaskSpec("prognosis", "powerlaw", t0=200.0, dt_ts=900.0)
        gen = np.random.default_rng(5)
        draws = np.column_stack([
            gen.uniform(0.3, 0.5, 300), gen.uniform(0.9, 1.1, 300),
            gen.uniform(1.0, 3.0, 300),
        ])
        post = tiny_posterior(draws, names=("alpha", "beta", "sigma"))
        bands = posterior_predictive(task, cand, post, np.linspace(800, 1300, 11),
                                     n_rep=500, rng=RngStream(3))
        assert np.all(bands.lower95 <= bands.mean)
        assert np.all(bands.mean <= bands.upper95)

    def test_n_rep_validation(self):
        cand = emulator_candidate(e_map=200.0)
        post = tiny_posterior([[0.5, 1.0]], names=("dtau", "sigma"))
        with pytest.raises(ValueError):
            posterior_predictive(TaskSpec("diagnosis"), cand, post, [1.0], n_rep=99)
        with pytest.raises(ValueError):
            posterior_predictive(TaskSpec("diagnosis"), cand, post, [], n_rep=100)


class TestConvergenceReportDict:
    def test_round_trip(self):
        report = ConvergenceReport(
            rhat={"a": 1.002, "b": 1.005}, n_chains=4, n_draws_per_chain=100,
            passed=True,
        )
        again = ConvergenceReport.from_dict(report.to_dict())
        assert again == report
