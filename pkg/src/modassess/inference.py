"""Posterior construction, adaptive-Metropolis sampling, and diagnostics.

The three monitoring tasks share one likelihood shape -- independent
Gaussian prediction errors around an observation-model prediction -- and
differ only in how the structural input is parameterized:

* system identification infers (E, sigma) on intact data (dtau = 0);
* diagnosis infers (dtau, sigma) at the candidate's calibrated E;
* prognosis infers deterioration-law parameters plus sigma, pushing
  dtau(t) through the observation model at each timestamp.

Sampling is component-wise Gaussian random-walk Metropolis with
per-parameter proposal scales tuned toward 0.30 acceptance during warm-up
(Robbins-Monro) and frozen afterwards.  Convergence is gated on the
rank-normalized split R-hat of Vehtari et al. (2021); assessments refuse
posteriors that fail the gate.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri
from scipy.stats import rankdata

from .deterioration import LogisticParams, PowerLawParams, logistic_dtau, powerlaw_dtau
from .distributions import NEG_INF, HalfNormal, Normal, RngStream, Uniform
from .errors import ConfigError, DataError, InitializationError
from .series import StrainSeries
from .structural import ModelCandidate, predict_strain

__all__ = [
    "TaskSpec",
    "ParameterSpace",
    "PosteriorDraws",
    "ConvergenceReport",
    "PredictiveBands",
    "parameter_space",
    "make_log_posterior",
    "log_posterior",
    "predict_draws",
    "run_mcmc",
    "split_rhat",
    "map_estimate",
    "posterior_predictive",
    "RHAT_THRESHOLD",
]

RHAT_THRESHOLD = 1.01

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

SIGMA_PRIOR = Uniform(0.0, 10.0)

_ADAPT_TARGET = 0.30
_ADAPT_DECAY = 0.6
_ADAPT_OFFSET = 10.0
_MAX_INIT_DRAWS = 1000


@dataclass(frozen=True)
class TaskSpec:
    """Which monitoring task a posterior is built for.

    ``t0`` and ``dt_ts`` (minutes) parameterize the power-law time axis and
    are deterministic study choices, not inferred quantities.
    """

    kind: str
    deterioration: str | None = None
    t0: float = 200.0
    dt_ts: float = 900.0

    def __post_init__(self):
        if self.kind not in ("sysid", "diagnosis", "prognosis"):
            raise ConfigError(f"unknown task kind {self.kind!r}")
        if self.kind == "prognosis":
            if self.deterioration not in ("logistic", "powerlaw"):
                raise ConfigError(
                    "prognosis needs deterioration 'logistic' or 'powerlaw', "
                    f"got {self.deterioration!r}"
                )
            if self.dt_ts <= 0.0:
                raise ConfigError("dt_ts must be positive")
        elif self.deterioration is not None:
            raise ConfigError(f"task {self.kind!r} takes no deterioration model")

    @property
    def name(self) -> str:
        if self.kind == "prognosis":
            return f"prognosis-{self.deterioration}"
        return self.kind


@dataclass(frozen=True)
class ParameterSpace:
    """Ordered parameter names with one independent prior per parameter.

    ``log_params`` marks strictly positive parameters that the sampler
    should walk in log space (a bijective reparameterization with the usual
    Jacobian correction); priors, posteriors and stored draws all stay in
    the original coordinates.  Useful when a rate parameter trades off
    exponentially against an exponent, which bends the posterior ridge in
    linear coordinates.
    """

    names: tuple[str, ...]
    priors: tuple
    log_params: tuple[bool, ...] = ()

    def __post_init__(self):
        if len(self.names) != len(self.priors):
            raise ValueError("names and priors must align")
        if not self.names:
            raise ValueError("empty parameter space")
        if not self.log_params:
            object.__setattr__(self, "log_params", (False,) * len(self.names))
        if len(self.log_params) != len(self.names):
            raise ValueError("log_params must align with names")
        for flag, prior, name in zip(self.log_params, self.priors, self.names):
            if flag and not (isinstance(prior, Uniform) and prior.lo > 0.0):
                raise ValueError(
                    f"log-space sampling of {name!r} needs a Uniform prior "
                    "with a positive lower bound"
                )

    @property
    def dim(self) -> int:
        return len(self.names)

    def log_prior(self, theta) -> float:
        total = 0.0
        for prior, value in zip(self.priors, theta):
            lp = prior.log_pdf(float(value))
            if lp == NEG_INF:
                return NEG_INF
            total += lp
        return total

    def sample_vector(self, gen: np.random.Generator) -> np.ndarray:
        return np.array([prior.sample(gen) for prior in self.priors])

    def to_internal(self, theta: np.ndarray) -> np.ndarray:
        u = np.array(theta, dtype=float)
        for k, flag in enumerate(self.log_params):
            if flag:
                u[k] = math.log(u[k])
        return u

    def from_internal(self, u: np.ndarray) -> np.ndarray:
        theta = np.array(u, dtype=float)
        for k, flag in enumerate(self.log_params):
            if flag:
                theta[k] = math.exp(theta[k])
        return theta

    def log_jacobian(self, u: np.ndarray) -> float:
        # d theta / d u = exp(u) for each log-walked coordinate.
        return float(sum(u[k] for k, flag in enumerate(self.log_params) if flag))

    def internal_scales(self) -> np.ndarray:
        scales = np.empty(self.dim)
        for k, (flag, prior) in enumerate(zip(self.log_params, self.priors)):
            if flag:
                scales[k] = (math.log(prior.hi) - math.log(prior.lo)) / math.sqrt(12.0)
            else:
                scales[k] = prior.std
        return scales


def parameter_space(task: TaskSpec, candidate: ModelCandidate) -> ParameterSpace:
    """Task-specific priors for one candidate model."""
    if task.kind == "sysid":
        return ParameterSpace(
            ("e_gpa", "sigma"), (Uniform(*candidate.e_range), SIGMA_PRIOR)
        )
    if task.kind == "diagnosis":
        return ParameterSpace(
            ("dtau", "sigma"), (Uniform(0.0, candidate.dtau_max), SIGMA_PRIOR)
        )
    if task.deterioration == "logistic":
        return ParameterSpace(
            ("alpha", "beta", "gamma", "sigma"),
            (
                HalfNormal(0.1),
                Normal(0.0, 1.0),
                Uniform(0.0, candidate.dtau_max),
                SIGMA_PRIOR,
            ),
        )
    # The rate term compensates the exponent multiplicatively, so the
    # sampler walks it in log space to keep the posterior ridge straight.
    return ParameterSpace(
        ("alpha", "beta", "sigma"),
        (Uniform(0.1, 1.5), Uniform(-1.5, 1.5), SIGMA_PRIOR),
        log_params=(True, False, False),
    )


def _require_e_map(task: TaskSpec, candidate: ModelCandidate) -> float:
    if task.kind == "sysid":
        return math.nan  # unused
    if candidate.e_map is None:
        raise ConfigError(
            f"{candidate.id}: task {task.name!r} needs e_map from system identification"
        )
    return float(candidate.e_map)


def _validate_series(data: StrainSeries):
    if len(data) < 2:
        raise DataError(f"need at least 2 observations, got {len(data)}")


def make_log_posterior(task: TaskSpec, candidate: ModelCandidate, data: StrainSeries):
    """Build the log-posterior callable for (task, candidate, data).

    The returned function maps a parameter vector to the unnormalized
    log-posterior; out-of-support priors and failed model-evaluation
    preconditions both return ``-inf`` so the sampler rejects naturally.
    """
    _validate_series(data)
    e_map = _require_e_map(task, candidate)
    space = parameter_space(task, candidate)
    times = data.times
    obs = data.strains
    n = len(obs)

    if task.kind == "prognosis":
        if np.any(times < task.t0) and task.deterioration == "powerlaw":
            raise DataError(
                f"power-law prognosis data precedes initiation time t0={task.t0}"
            )
        at_t0 = times == task.t0  # excluded from the sum for beta <= 0

    def target(theta) -> float:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (space.dim,):
            raise ValueError(
                f"theta has length {theta.shape}, expected {space.dim}"
            )
        lp = space.log_prior(theta)
        if lp == NEG_INF:
            return NEG_INF
        sigma = float(theta[-1])
        if sigma <= 0.0:
            return NEG_INF

        if task.kind == "sysid":
            pred = predict_strain(candidate, float(theta[0]), 0.0)
            resid = obs - pred
            n_eff = n
        elif task.kind == "diagnosis":
            pred = predict_strain(candidate, e_map, float(theta[0]))
            resid = obs - pred
            n_eff = n
        else:
            if task.deterioration == "logistic":
                params = LogisticParams(float(theta[0]), float(theta[1]), float(theta[2]))
                dtau_t = logistic_dtau(params, times)
                mask = None
            else:
                alpha, beta = float(theta[0]), float(theta[1])
                mask = None if beta > 0.0 else ~at_t0
                p = PowerLawParams(alpha, beta, task.t0, task.dt_ts)
                t_eval = times if mask is None else times[mask]
                dtau_t = powerlaw_dtau(p, t_eval)
            dtau_t = np.clip(dtau_t, 0.0, candidate.dtau_max)
            pred = predict_strain(candidate, e_map, dtau_t)
            resid = (obs if mask is None else obs[mask]) - pred
            n_eff = len(resid)
            if n_eff == 0:
                return NEG_INF

        ssr = float(np.dot(resid, resid))
        loglik = -n_eff * (_HALF_LOG_2PI + math.log(sigma)) - 0.5 * ssr / (sigma * sigma)
        return lp + loglik

    target.space = space
    return target


def log_posterior(task: TaskSpec, candidate: ModelCandidate, data: StrainSeries, theta) -> float:
    """One-shot log-posterior evaluation (see ``make_log_posterior``)."""
    return make_log_posterior(task, candidate, data)(theta)


def predict_draws(
    task: TaskSpec,
    candidate: ModelCandidate,
    times: np.ndarray,
    thetas: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized observation-model predictions for a batch of draws.

    Returns ``(pred, clamped)`` where ``pred`` broadcasts against
    ``(n_draws, len(times))`` -- constant-in-time tasks return shape
    ``(n_draws, 1)`` -- and ``clamped`` flags draws whose deterioration
    output had to be clipped into [0, dtau_max].
    """
    times = np.asarray(times, dtype=float)
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    n = len(thetas)
    e_map = _require_e_map(task, candidate)

    if task.kind == "sysid":
        pred = predict_strain(candidate, thetas[:, 0], 0.0)
        return pred[:, None], np.zeros(n, dtype=bool)
    if task.kind == "diagnosis":
        pred = predict_strain(candidate, e_map, thetas[:, 0])
        return pred[:, None], np.zeros(n, dtype=bool)

    if task.deterioration == "logistic":
        z = thetas[:, 0][:, None] + thetas[:, 1][:, None] * times[None, :]
        zmask = z >= 0.0
        sig = np.where(zmask, 1.0 / (1.0 + np.exp(-np.where(zmask, z, 0.0))), 0.0)
        ez = np.exp(np.where(~zmask, z, 0.0))
        sig = np.where(~zmask, ez / (1.0 + ez), sig)
        dtau = thetas[:, 2][:, None] * sig
    else:
        dt = times - task.t0
        if np.any(dt < 0.0):
            raise DataError(f"prediction time precedes initiation t0={task.t0}")
        betas = thetas[:, 1]
        if np.any(dt == 0.0) and np.any(betas <= 0.0):
            raise DataError(
                "power-law prediction at t == t0 undefined for nonpositive exponents"
            )
        dtau = (thetas[:, 0] / task.dt_ts)[:, None] * np.power(
            dt[None, :], betas[:, None]
        )
    clipped = np.clip(dtau, 0.0, candidate.dtau_max)
    clamped = np.any(clipped != dtau, axis=1)
    pred = predict_strain(candidate, e_map, clipped)
    return pred, clamped


@dataclass(frozen=True)
class PosteriorDraws:
    """Pooled post-warm-up MCMC draws with provenance.

    ``draws`` is (n_pos, dim) in chain-major order; every stored draw has a
    finite log-posterior.
    """

    draws: np.ndarray
    names: tuple[str, ...]
    log_posterior: np.ndarray
    chain_ids: np.ndarray
    settings: dict = field(default_factory=dict)
    accept_rates: tuple[float, ...] = ()

    def __post_init__(self):
        draws = np.atleast_2d(np.asarray(self.draws, dtype=float))
        object.__setattr__(self, "draws", draws)
        object.__setattr__(self, "log_posterior", np.asarray(self.log_posterior, dtype=float))
        object.__setattr__(self, "chain_ids", np.asarray(self.chain_ids, dtype=int))
        if draws.shape[1] != len(self.names):
            raise ValueError("draw matrix width must match parameter names")
        if len(self.log_posterior) != len(draws) or len(self.chain_ids) != len(draws):
            raise ValueError("per-draw arrays must match the number of draws")
        if len(draws) and not np.all(np.isfinite(self.log_posterior)):
            raise ValueError("stored draws must have finite log-posterior")

    def __len__(self) -> int:
        return len(self.draws)

    def column(self, name: str) -> np.ndarray:
        return self.draws[:, self.names.index(name)]

    def chains_for(self, name: str) -> list[np.ndarray]:
        col = self.column(name)
        return [col[self.chain_ids == c] for c in np.unique(self.chain_ids)]

    def single_chain(self, chain_id: int) -> "PosteriorDraws":
        mask = self.chain_ids == chain_id
        if not np.any(mask):
            raise ValueError(f"no draws for chain {chain_id}")
        return PosteriorDraws(
            self.draws[mask],
            self.names,
            self.log_posterior[mask],
            self.chain_ids[mask],
            self.settings,
            self.accept_rates,
        )

    def credible_interval(self, name: str, level: float = 0.95) -> tuple[float, float]:
        col = self.column(name)
        tail = 100.0 * (1.0 - level) / 2.0
        return (
            float(np.percentile(col, tail)),
            float(np.percentile(col, 100.0 - tail)),
        )

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write("chain,draw," + ",".join(self.names) + ",log_posterior\n")
            draw_index = 0
            last_chain = None
            for i in range(len(self)):
                chain = int(self.chain_ids[i])
                if chain != last_chain:
                    draw_index = 0
                    last_chain = chain
                cells = [str(chain), str(draw_index)]
                cells += [repr(float(v)) for v in self.draws[i]]
                cells.append(repr(float(self.log_posterior[i])))
                f.write(",".join(cells) + "\n")
                draw_index += 1

    @classmethod
    def from_csv(cls, path) -> "PosteriorDraws":
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
        if not lines:
            raise DataError(f"{path}: empty posterior file")
        header = lines[0].split(",")
        if header[:2] != ["chain", "draw"] or header[-1] != "log_posterior":
            raise DataError(f"{path}: unexpected posterior header {lines[0]!r}")
        names = tuple(header[2:-1])
        chains, draws, lps = [], [], []
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            cells = line.split(",")
            if len(cells) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields")
            chains.append(int(cells[0]))
            draws.append([float(v) for v in cells[2:-1]])
            lps.append(float(cells[-1]))
        return cls(
            np.array(draws), names, np.array(lps), np.array(chains, dtype=int)
        )


@dataclass(frozen=True)
class ConvergenceReport:
    """Per-parameter rank-normalized split R-hat and the pass/fail gate."""

    rhat: dict[str, float]
    n_chains: int
    n_draws_per_chain: int
    passed: bool
    threshold: float = RHAT_THRESHOLD

    def to_dict(self) -> dict:
        return {
            "rhat": {k: float(v) for k, v in self.rhat.items()},
            "n_chains": self.n_chains,
            "n_draws_per_chain": self.n_draws_per_chain,
            "passed": bool(self.passed),
            "threshold": self.threshold,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConvergenceReport":
        return cls(
            rhat={k: float(v) for k, v in d["rhat"].items()},
            n_chains=int(d["n_chains"]),
            n_draws_per_chain=int(d["n_draws_per_chain"]),
            passed=bool(d["passed"]),
            threshold=float(d.get("threshold", RHAT_THRESHOLD)),
        )


def split_rhat(chains) -> float:
    """Rank-normalized split R-hat for one parameter.

    Each chain is halved, the pooled draws are rank-normalized through the
    inverse normal CDF of their fractional ranks (Blom offsets), and the
    classic between/within variance ratio is computed on the transformed
    halves.  Returns exactly 1.0 for degenerate constant input.
    """
    arrays = [np.asarray(c, dtype=float) for c in chains]
    if len(arrays) < 2:
        raise ValueError("split_rhat needs at least 2 chains")
    n = len(arrays[0])
    if any(len(a) != n for a in arrays):
        raise ValueError("chains must have equal lengths")
    if n < 4:
        raise ValueError("split_rhat needs at least 4 draws per chain")

    half = n // 2
    halves = []
    for a in arrays:
        halves.append(a[:half])
        halves.append(a[n - half:])  # drops the middle draw when n is odd
    pooled = np.concatenate(halves)
    if np.var(pooled) == 0.0:
        return 1.0

    ranks = rankdata(pooled, method="average")
    z = ndtri((ranks - 0.375) / (pooled.size + 0.25))
    zs = z.reshape(len(halves), half)

    within = float(np.mean(np.var(zs, axis=1, ddof=1)))
    between = half * float(np.var(np.mean(zs, axis=1), ddof=1))
    if within == 0.0:
        return 1.0 if between == 0.0 else float("inf")
    var_plus = (half - 1) / half * within + between / half
    return float(np.sqrt(var_plus / within))


def map_estimate(posterior: PosteriorDraws) -> np.ndarray:
    """The stored draw with maximal log-posterior (first wins on ties)."""
    if len(posterior) == 0:
        raise ValueError("empty posterior")
    return posterior.draws[int(np.argmax(posterior.log_posterior))].copy()


class _RunningCovariance:
    """Welford accumulator for the warm-up draw covariance."""

    def __init__(self, dim: int):
        self.count = 0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros((dim, dim))

    def update(self, x: np.ndarray) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += np.outer(delta, x - self.mean)

    def covariance(self) -> np.ndarray:
        return self.m2 / max(self.count - 1, 1)


def _proposal_cholesky(cov: np.ndarray, floor_var: np.ndarray) -> np.ndarray:
    dim = len(floor_var)
    scaled = (2.38**2 / dim) * cov
    jitter = 1e-10 * np.max(floor_var)
    for _ in range(6):
        try:
            return np.linalg.cholesky(scaled + jitter * np.eye(dim))
        except np.linalg.LinAlgError:
            jitter *= 100.0
    # Degenerate history: fall back to an uncorrelated proposal.
    return np.diag(np.sqrt(floor_var / dim))


def run_mcmc(
    target,
    space: ParameterSpace,
    n_chains: int = 8,
    n_warmup: int = 2000,
    n_samples: int = 2000,
    seed: int = 0,
) -> tuple[PosteriorDraws, ConvergenceReport]:
    """Sample ``target`` with adaptive Gaussian random-walk Metropolis.

    Chains start from independent prior draws (re-drawn until the density is
    finite).  Warm-up has two stages: component-wise moves whose
    per-parameter scales adapt toward 0.30 acceptance (Robbins-Monro), then
    joint moves whose covariance is learned from the warm-up history
    (Haario-style) with a global scale adapted to the same target.  All
    adaptation freezes when warm-up ends.  Identical ``(seed, settings,
    target)`` reproduce bitwise-identical draws.
    """
    if n_chains < 2:
        raise ValueError("need at least 2 chains for convergence diagnostics")
    if n_warmup < 100 or n_samples < 100:
        raise ValueError("n_warmup and n_samples must each be at least 100")

    dim = space.dim
    init_scales = space.internal_scales()
    n_phase1 = n_warmup // 2
    chol_refresh = 100
    all_draws = np.empty((n_chains, n_samples, dim))
    all_lp = np.empty((n_chains, n_samples))
    accept_rates = []

    def target_internal(u):
        theta = space.from_internal(u)
        lp_theta = target(theta)
        if lp_theta == NEG_INF:
            return NEG_INF, NEG_INF
        return lp_theta + space.log_jacobian(u), lp_theta

    for chain in range(n_chains):
        gen = RngStream(seed, chain).generator
        u = None
        for _ in range(_MAX_INIT_DRAWS):
            cand = space.sample_vector(gen)
            lp_theta = target(cand)
            if math.isfinite(lp_theta):
                u = space.to_internal(cand)
                lp = lp_theta + space.log_jacobian(u)
                break
        if u is None:
            raise InitializationError(
                f"chain {chain}: no finite log-posterior start in "
                f"{_MAX_INIT_DRAWS} prior draws"
            )

        log_scales = np.log(init_scales)
        running = _RunningCovariance(dim)
        chol = None
        log_s = 0.0
        accepted = 0
        for it in range(n_warmup + n_samples):
            warm = it < n_warmup
            if it < n_phase1:
                # Stage 1: component-wise scale finding.
                gain = (_ADAPT_OFFSET + it) ** (-_ADAPT_DECAY)
                for k in range(dim):
                    prop = u.copy()
                    prop[k] += math.exp(log_scales[k]) * gen.standard_normal()
                    lp_prop, lp_prop_theta = target_internal(prop)
                    alpha = (
                        0.0 if lp_prop == NEG_INF
                        else math.exp(min(0.0, lp_prop - lp))
                    )
                    if gen.random() < alpha:
                        u, lp, lp_theta = prop, lp_prop, lp_prop_theta
                    log_scales[k] += gain * (alpha - _ADAPT_TARGET)
            else:
                # Stage 2 (and sampling): joint moves along a covariance
                # learned from stage-2 history only; its own adaptation clock
                # restarts so the global scale can correct quickly.
                if warm and (chol is None or (it - n_phase1) % chol_refresh == 0):
                    floor_var = np.exp(2.0 * log_scales)
                    if running.count >= max(2 * dim, 20):
                        chol = _proposal_cholesky(running.covariance(), floor_var)
                    else:
                        chol = np.diag(np.sqrt(floor_var / dim))
                prop = u + math.exp(log_s) * (chol @ gen.standard_normal(dim))
                lp_prop, lp_prop_theta = target_internal(prop)
                alpha = (
                    0.0 if lp_prop == NEG_INF
                    else math.exp(min(0.0, lp_prop - lp))
                )
                if gen.random() < alpha:
                    u, lp, lp_theta = prop, lp_prop, lp_prop_theta
                    if not warm:
                        accepted += 1
                if warm:
                    gain = (_ADAPT_OFFSET + it - n_phase1) ** (-_ADAPT_DECAY)
                    log_s += gain * (alpha - _ADAPT_TARGET)
                    running.update(u)
                else:
                    idx = it - n_warmup
                    all_draws[chain, idx] = space.from_internal(u)
                    all_lp[chain, idx] = lp_theta
        accept_rates.append(accepted / n_samples)

    rhat = {
        name: split_rhat([all_draws[c, :, k] for c in range(n_chains)])
        for k, name in enumerate(space.names)
    }
    report = ConvergenceReport(
        rhat=rhat,
        n_chains=n_chains,
        n_draws_per_chain=n_samples,
        passed=all(v < RHAT_THRESHOLD for v in rhat.values()),
    )
    posterior = PosteriorDraws(
        draws=all_draws.reshape(n_chains * n_samples, dim),
        names=space.names,
        log_posterior=all_lp.reshape(-1),
        chain_ids=np.repeat(np.arange(n_chains), n_samples),
        settings={
            "n_chains": n_chains,
            "n_warmup": n_warmup,
            "n_samples": n_samples,
            "seed": int(seed),
        },
        accept_rates=tuple(accept_rates),
    )
    return posterior, report


@dataclass(frozen=True)
class PredictiveBands:
    """Posterior-predictive summary per requested time."""

    times: np.ndarray
    mean: np.ndarray
    lower95: np.ndarray
    upper95: np.ndarray
    samples: np.ndarray
    clamped_draws: int = 0

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write("time_min,mean,lower95,upper95\n")
            for i in range(len(self.times)):
                f.write(
                    f"{float(self.times[i])!r},{float(self.mean[i])!r},"
                    f"{float(self.lower95[i])!r},{float(self.upper95[i])!r}\n"
                )


def posterior_predictive(
    task: TaskSpec,
    candidate: ModelCandidate,
    posterior: PosteriorDraws,
    times,
    n_rep: int = 1000,
    rng=None,
) -> PredictiveBands:
    """Forward-simulate observations at ``times`` from posterior draws.

    Each replicate picks one stored (theta, sigma) uniformly, pushes it
    through the (deterioration and) observation model and adds Gaussian
    noise; the bands are the empirical 2.5/97.5 percentiles.
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise ValueError("times must be nonempty")
    if n_rep < 100:
        raise ValueError("n_rep must be at least 100")
    if len(posterior) == 0:
        raise ValueError("empty posterior")
    if rng is None:
        rng = RngStream(0)
    gen = rng.generator if isinstance(rng, RngStream) else rng

    idx = gen.integers(0, len(posterior), size=n_rep)
    thetas = posterior.draws[idx]
    sigmas = thetas[:, -1]
    pred, clamped = predict_draws(task, candidate, times, thetas)
    pred = np.broadcast_to(pred, (n_rep, times.size))
    samples = pred + sigmas[:, None] * gen.standard_normal((n_rep, times.size))
    return PredictiveBands(
        times=times,
        mean=samples.mean(axis=0),
        lower95=np.percentile(samples, 2.5, axis=0),
        upper95=np.percentile(samples, 97.5, axis=0),
        samples=samples,
        clamped_draws=int(np.sum(clamped)),
    )
