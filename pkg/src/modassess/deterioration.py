"""Time laws for corrosion-induced thickness loss.

Two families cover the usual marine-corrosion behaviors: a three-parameter
logistic curve that saturates at an upper cut-off, and a normalized power
law with a deterministic initiation time.  Both are pure functions of time,
vectorized over ``t``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import SingularityError

__all__ = [
    "LogisticParams",
    "PowerLawParams",
    "logistic_dtau",
    "powerlaw_dtau",
]


@dataclass(frozen=True)
class LogisticParams:
    """Thickness loss ``gamma / (1 + exp(-(alpha + beta t)))``.

    ``alpha`` is dimensionless, ``beta`` is per minute and ``gamma`` (mm) is
    the saturation value.
    """

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        if self.gamma < 0.0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")


@dataclass(frozen=True)
class PowerLawParams:
    """Thickness loss ``(alpha / dt_ts) * (t - t0)**beta``.

    ``t0`` (minutes) is the deterministic corrosion initiation time and
    ``dt_ts`` (minutes) rescales the rate term so that ``alpha`` stays of
    order one regardless of the record length.
    """

    alpha: float
    beta: float
    t0: float = 0.0
    dt_ts: float = 1.0

    def __post_init__(self):
        if self.dt_ts <= 0.0:
            raise ValueError(f"dt_ts must be positive, got {self.dt_ts}")
        if self.t0 < 0.0:
            raise ValueError(f"t0 must be nonnegative, got {self.t0}")


def _stable_sigmoid(z: np.ndarray) -> np.ndarray:
    # Two-branch form: never exponentiates a large positive argument.
    out = np.empty_like(z)
    pos = z >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_dtau(params: LogisticParams, t):
    """Logistic thickness loss at time ``t`` (minutes); value in [0, gamma]."""
    z = np.asarray(params.alpha + params.beta * np.asarray(t, dtype=float))
    out = params.gamma * _stable_sigmoid(np.atleast_1d(z))
    return float(out[0]) if z.ndim == 0 else out.reshape(z.shape)


def powerlaw_dtau(params: PowerLawParams, t):
    """Power-law thickness loss at time ``t`` (minutes).

    Exactly zero at ``t == t0`` for positive exponents; ``t == t0`` with a
    nonpositive exponent is a singularity and raises, and callers that sum
    likelihood terms are expected to exclude that point instead.
    """
    tt = np.asarray(t, dtype=float)
    if np.any(tt < params.t0):
        raise ValueError(f"time before initiation t0={params.t0} min")
    dt = tt - params.t0
    if params.beta <= 0.0 and np.any(dt == 0.0):
        raise SingularityError(
            f"power law undefined at t == t0 for exponent {params.beta} <= 0"
        )
    out = (params.alpha / params.dt_ts) * np.power(np.atleast_1d(dt), params.beta)
    return float(out[0]) if tt.ndim == 0 else out.reshape(tt.shape)
