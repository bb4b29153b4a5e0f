"""Reliability and expected-utility scoring of candidate models.

Every candidate is scored against posterior draws on three attributes:

* a normalized-error attribute (and its utility, clamped to [0, 1]);
* a log-likelihood attribute normalized against the candidate's own MAP
  evaluated with the observed data scatter;
* a decision-support attribute comparing failure-probability estimates
  (log10 scale) against a designated oracle candidate, draw by draw.

The unified score is a weighted average of one data-based attribute and
the failure-probability one.  All utilities are risk-neutral and live in
[0, 1]; the oracle's failure-probability utility is exactly 1 because it
is compared against itself.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .distributions import Distribution1D, Normal
from .errors import ConvergenceError, DataError
from .inference import (
    ConvergenceReport,
    PosteriorDraws,
    TaskSpec,
    map_estimate,
    predict_draws,
)
from .series import StrainSeries
from .structural import ModelCandidate, predict_demand

__all__ = [
    "PF_FLOOR",
    "LimitState",
    "UtilityWeights",
    "CandidateUtilities",
    "UtilityReport",
    "failure_probability",
    "nmse",
    "u_nmse",
    "loglik_attr",
    "u_lik",
    "u_pf",
    "expected_utility",
    "unified_utility",
    "assess_candidates",
]

# Keeps log10(P_f) finite; far below any physically meaningful probability.
PF_FLOOR = 1e-16

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

_CHUNK = 2048


@dataclass(frozen=True)
class LimitState:
    """Capacity distribution for the elastic-yielding limit state.

    Failure means the per-draw demand (peak von Mises stress) exceeds the
    random capacity (yield stress).
    """

    capacity: Distribution1D = Normal(284.5, 21.5)


def failure_probability(demand, limit_state: LimitState):
    """P[capacity < demand] in closed form, floored at ``PF_FLOOR``."""
    d = np.asarray(demand, dtype=float)
    if np.any(d < 0.0):
        raise ValueError("demand must be nonnegative")
    p = np.clip(limit_state.capacity.cdf(d), PF_FLOOR, 1.0)
    return float(p) if np.ndim(p) == 0 else p


def nmse(obs, pred, variant: str = "paper") -> float:
    """Normalized error attribute between observation and prediction vectors.

    The default ``"paper"`` variant is ``100 / (N sigma_obs^2) * sqrt(SSE)``
    (square root of the summed squares, not the mean); ``"squared"`` is the
    conventional ``100 * SSE / (N sigma_obs^2)``, under which a
    mean-equivalent predictor scores exactly 100.
    """
    o = np.asarray(obs, dtype=float)
    p = np.asarray(pred, dtype=float)
    if o.shape != p.shape or o.ndim != 1:
        raise ValueError("obs and pred must be 1-D vectors of equal length")
    n = len(o)
    if n < 2:
        raise ValueError("need at least 2 observations")
    var_obs = float(np.var(o))
    if var_obs == 0.0:
        raise ValueError("observation variance is zero")
    sse = float(np.dot(o - p, o - p))
    if variant == "paper":
        return 100.0 / (n * var_obs) * math.sqrt(sse)
    if variant == "squared":
        return 100.0 * sse / (n * var_obs)
    raise ValueError(f"unknown nmse variant {variant!r}")


def u_nmse(nmse_value: float) -> float:
    """Error-based utility: 1 at a perfect fit, 0 at or beyond 100."""
    if nmse_value < 0.0:
        raise ValueError("nmse must be nonnegative")
    return float(np.clip(1.0 - nmse_value / 100.0, 0.0, 1.0))


def loglik_attr(obs, pred, sigma: float) -> float:
    """Gaussian log-likelihood of the residuals at noise level ``sigma``."""
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    o = np.asarray(obs, dtype=float)
    p = np.asarray(pred, dtype=float)
    if o.shape != p.shape:
        raise ValueError("obs and pred must have equal length")
    resid = o - p
    n = len(o)
    return float(
        -n * (_HALF_LOG_2PI + math.log(sigma)) - 0.5 * np.dot(resid, resid) / (sigma**2)
    )


def u_lik(l_draw: float, l_ref: float) -> float:
    """Likelihood utility: 1 when the draw matches the reference, falling
    toward 0 as the log-likelihoods diverge."""
    if l_draw == l_ref:
        return 1.0
    denom = max(abs(l_draw), abs(l_ref))
    return float(np.clip(1.0 - abs(l_draw - l_ref) / denom, 0.0, 1.0))


def _u_lik_vec(l_draw: np.ndarray, l_ref: float) -> np.ndarray:
    denom = np.maximum(np.abs(l_draw), abs(l_ref))
    with np.errstate(invalid="ignore", divide="ignore"):
        u = 1.0 - np.abs(l_draw - l_ref) / denom
    u = np.where(l_draw == l_ref, 1.0, u)
    return np.clip(u, 0.0, 1.0)


def u_pf(pf_oracle: float, pf_cand: float) -> float:
    """Failure-probability utility on the log10 scale; symmetric, 1 iff equal."""
    for value in (pf_oracle, pf_cand):
        if not 0.0 < value <= 1.0:
            raise ValueError(f"failure probability {value} outside (0, 1]")
    la, lb = math.log10(pf_oracle), math.log10(pf_cand)
    if la == lb:
        return 1.0
    denom = max(abs(la), abs(lb))
    return float(np.clip(1.0 - abs(la - lb) / denom, 0.0, 1.0))


def _u_pf_vec(pf_a: np.ndarray, pf_b: np.ndarray) -> np.ndarray:
    la, lb = np.log10(pf_a), np.log10(pf_b)
    denom = np.maximum(np.abs(la), np.abs(lb))
    with np.errstate(invalid="ignore", divide="ignore"):
        u = 1.0 - np.abs(la - lb) / denom
    u = np.where(la == lb, 1.0, u)
    return np.clip(u, 0.0, 1.0)


def expected_utility(values) -> float:
    """Monte Carlo mean of per-draw utilities."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("cannot average an empty utility list")
    return float(np.mean(v))


@dataclass(frozen=True)
class UtilityWeights:
    """Convex weights (w1 for the data attribute, w2 for decision support)."""

    w1: float
    w2: float

    def __post_init__(self):
        if not (0.0 <= self.w1 <= 1.0 and 0.0 <= self.w2 <= 1.0):
            raise ValueError("weights must lie in [0, 1]")
        if abs(self.w1 + self.w2 - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {self.w1} + {self.w2}")
        # Store an exactly complementary pair so downstream sums are exact.
        object.__setattr__(self, "w2", 1.0 - self.w1)


def unified_utility(u_data: float, u_pf_value: float, weights: UtilityWeights) -> float:
    """Weighted average of the data-based and decision-support utilities."""
    for value in (u_data, u_pf_value):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"utility {value} outside [0, 1]")
    return weights.w1 * u_data + weights.w2 * u_pf_value


@dataclass(frozen=True)
class CandidateUtilities:
    id: str
    u_nmse: float
    u_lik: float
    u_pf: float
    u_unified: float
    n_pos: int
    clamped_draws: int


@dataclass(frozen=True)
class UtilityReport:
    """Per-candidate expected utilities for one assessment run."""

    task: str
    oracle: str
    weights: UtilityWeights
    sigma_obs: float
    data_attribute: str
    candidates: tuple[CandidateUtilities, ...]

    def row(self, candidate_id: str) -> CandidateUtilities:
        for row in self.candidates:
            if row.id == candidate_id:
                return row
        raise KeyError(candidate_id)

    def to_json_dict(self) -> dict:
        return {
            "task": self.task,
            "oracle": self.oracle,
            "weights": {"w1": self.weights.w1, "w2": self.weights.w2},
            "sigma_obs": self.sigma_obs,
            "data_attribute": self.data_attribute,
            "candidates": [
                {
                    "id": c.id,
                    "u_nmse": c.u_nmse,
                    "u_lik": c.u_lik,
                    "u_pf": c.u_pf,
                    "u_unified": c.u_unified,
                    "n_pos": c.n_pos,
                    "clamped_draws": c.clamped_draws,
                }
                for c in self.candidates
            ],
        }

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json_dict(), f, indent=2, sort_keys=True)
            f.write("\n")

    def save_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write("id,u_nmse,u_lik,u_pf,u_unified,n_pos,clamped_draws\n")
            for c in self.candidates:
                f.write(
                    f"{c.id},{c.u_nmse!r},{c.u_lik!r},{c.u_pf!r},"
                    f"{c.u_unified!r},{c.n_pos},{c.clamped_draws}\n"
                )


def _pf_inputs(task: TaskSpec, candidate: ModelCandidate, data: StrainSeries,
               draws: PosteriorDraws) -> np.ndarray:
    """Per-draw thickness loss entering the failure-probability check."""
    thetas = draws.draws
    if task.kind == "sysid":
        return np.zeros(len(thetas))
    if task.kind == "diagnosis":
        return thetas[:, 0]
    # Prognosis: only the last available time instance matters.
    t_last = float(data.times[-1])
    if task.deterioration == "logistic":
        z = thetas[:, 0] + thetas[:, 1] * t_last
        pos = z >= 0.0
        sig = np.empty_like(z)
        sig[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        sig[~pos] = ez / (1.0 + ez)
        out = thetas[:, 2] * sig
    else:
        dt = t_last - task.t0
        if dt < 0.0 or (dt == 0.0 and np.any(thetas[:, 1] <= 0.0)):
            raise DataError(
                f"power-law evaluation undefined at t={t_last} with t0={task.t0}"
            )
        out = thetas[:, 0] / task.dt_ts * dt ** thetas[:, 1]
    return np.clip(out, 0.0, candidate.dtau_max)


def _per_draw_attributes(task, candidate, data, posterior, sigma_obs, nmse_variant):
    """Chunked per-draw attribute pass: NMSE utility, log-likelihood, clamp flags."""
    obs = data.strains
    n_obs = len(obs)
    var_obs = sigma_obs**2
    thetas = posterior.draws
    sigmas = thetas[:, -1]
    n = len(thetas)

    u_nmse_draws = np.empty(n)
    loglik_draws = np.empty(n)
    clamped = np.zeros(n, dtype=bool)
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        pred, clamp_flags = predict_draws(task, candidate, data.times, thetas[start:stop])
        resid = obs[None, :] - pred
        ssr = np.einsum("ij,ij->i", resid, resid)
        if nmse_variant == "paper":
            nmse_vals = 100.0 / (n_obs * var_obs) * np.sqrt(ssr)
        else:
            nmse_vals = 100.0 * ssr / (n_obs * var_obs)
        u_nmse_draws[start:stop] = np.clip(1.0 - nmse_vals / 100.0, 0.0, 1.0)
        sig = sigmas[start:stop]
        loglik_draws[start:stop] = (
            -n_obs * (_HALF_LOG_2PI + np.log(sig)) - 0.5 * ssr / sig**2
        )
        clamped[start:stop] = clamp_flags
    return u_nmse_draws, loglik_draws, clamped


def assess_candidates(
    candidates,
    posteriors: dict,
    data: StrainSeries,
    task: TaskSpec,
    limit_state: LimitState,
    weights: UtilityWeights,
    data_attribute: str = "loglik",
    nmse_variant: str = "paper",
    chain: int | None = None,
) -> UtilityReport:
    """Score every candidate against the oracle on one evaluation dataset.

    ``posteriors`` maps candidate id to ``(PosteriorDraws, ConvergenceReport)``;
    the oracle's entry doubles as the reference for the failure-probability
    comparison.  Posteriors that failed the convergence gate are refused.
    ``chain`` restricts the estimate to a single chain's draws.
    """
    if data_attribute not in ("loglik", "nmse"):
        raise ValueError(f"unknown data attribute {data_attribute!r}")
    oracles = [c for c in candidates if c.is_oracle]
    if len(oracles) != 1:
        raise ValueError(f"exactly one oracle required, found {len(oracles)}")
    oracle = oracles[0]

    for cand in candidates:
        if cand.id not in posteriors:
            raise ValueError(f"no posterior supplied for candidate {cand.id}")
        report = posteriors[cand.id][1]
        if report is not None and not report.passed:
            bad = {k: round(v, 4) for k, v in report.rhat.items()}
            raise ConvergenceError(
                f"{cand.id}: posterior failed the split-R-hat gate "
                f"(threshold {report.threshold}): {bad}"
            )

    if len(data) < 2:
        raise DataError("evaluation data needs at least 2 observations")
    sigma_obs = float(np.std(data.strains))
    if sigma_obs == 0.0:
        raise DataError("evaluation data has zero variance")

    def draws_of(cand_id: str) -> PosteriorDraws:
        posterior = posteriors[cand_id][0]
        return posterior.single_chain(chain) if chain is not None else posterior

    oracle_draws = draws_of(oracle.id)
    pf_oracle = failure_probability(
        predict_demand(oracle, _pf_inputs(task, oracle, data, oracle_draws)),
        limit_state,
    )

    rows = []
    for cand in candidates:
        posterior = draws_of(cand.id)
        u_nmse_draws, loglik_draws, clamped = _per_draw_attributes(
            task, cand, data, posterior, sigma_obs, nmse_variant
        )
        theta_map = map_estimate(posterior)
        pred_map, _ = predict_draws(task, cand, data.times, theta_map[None, :])
        pred_map = np.broadcast_to(pred_map, (1, len(data))).ravel()
        l_ref = loglik_attr(data.strains, pred_map, sigma_obs)
        u_lik_draws = _u_lik_vec(loglik_draws, l_ref)

        pf_cand = failure_probability(
            predict_demand(cand, _pf_inputs(task, cand, data, posterior)),
            limit_state,
        )
        if len(pf_cand) != len(pf_oracle):
            raise ValueError(
                f"{cand.id}: posterior size {len(pf_cand)} differs from the "
                f"oracle's {len(pf_oracle)}; draw-wise comparison needs equal "
                "sampler settings"
            )
        u_pf_draws = _u_pf_vec(pf_oracle, pf_cand)

        u_nmse_exp = expected_utility(u_nmse_draws)
        u_lik_exp = expected_utility(u_lik_draws)
        u_pf_exp = expected_utility(u_pf_draws)
        u_data = u_lik_exp if data_attribute == "loglik" else u_nmse_exp
        rows.append(
            CandidateUtilities(
                id=cand.id,
                u_nmse=u_nmse_exp,
                u_lik=u_lik_exp,
                u_pf=u_pf_exp,
                u_unified=unified_utility(u_data, u_pf_exp, weights),
                n_pos=len(posterior),
                clamped_draws=int(np.sum(clamped)),
            )
        )

    return UtilityReport(
        task=task.name,
        oracle=oracle.id,
        weights=weights,
        sigma_obs=sigma_obs,
        data_attribute=data_attribute,
        candidates=tuple(rows),
    )
