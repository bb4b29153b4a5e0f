"""Synthetic three-phase strain records standing in for the lab experiment.

The ground truth is an emulator-family model driven by a chosen
deterioration law: no thickness loss during phase 1, the configured law
during phase 2, and a frozen value during phase 3 (corrosive activity
halts once waste accumulates).  Gaussian measurement noise sits on top.
"""

from dataclasses import dataclass, field

import numpy as np

from .deterioration import (
    LogisticParams,
    PowerLawParams,
    logistic_dtau,
    powerlaw_dtau,
)
from .distributions import RngStream
from .errors import ConfigError, DataError, SingularSectionError
from .series import StrainSeries
from .structural import Geometry, emulator_strain

__all__ = ["TruthConfig", "generate_synthetic"]


@dataclass(frozen=True)
class TruthConfig:
    """Everything needed to simulate the monitored specimen.

    ``kappa_eps``/``kappa_sig`` are the ground-truth emulator coefficients
    (defaults match the highest-fidelity candidate so that candidate is
    well-specified by construction).  Times are minutes; the record spans
    [0, end_time] at the given sampling interval.
    """

    geometry: Geometry = field(default_factory=Geometry)
    e_true: float = 200.0
    deterioration: LogisticParams | PowerLawParams = PowerLawParams(
        alpha=0.8, beta=1.0, t0=200.0, dt_ts=900.0
    )
    noise_sigma: float = 8.0
    phase1_end: float = 200.0
    phase2_end: float = 1100.0
    end_time: float = 1300.0
    interval: float = 1.0
    kappa_eps: float = 0.8
    kappa_sig: float = 2.2

    def __post_init__(self):
        if not 0.0 < self.phase1_end < self.phase2_end < self.end_time:
            raise ConfigError(
                "phase boundaries must satisfy 0 < phase1_end < phase2_end < end_time"
            )
        if self.interval <= 0.0:
            raise ConfigError("sampling interval must be positive")
        if self.noise_sigma < 0.0:
            raise ConfigError("noise sigma must be nonnegative")
        if self.e_true <= 0.0:
            raise ConfigError("true Young's modulus must be positive")

    def dtau_law(self, t):
        if isinstance(self.deterioration, LogisticParams):
            return logistic_dtau(self.deterioration, t)
        return powerlaw_dtau(self.deterioration, t)


def true_dtau(config: TruthConfig, times) -> np.ndarray:
    """Deterministic thickness-loss trajectory with the phase-3 freeze."""
    times = np.asarray(times, dtype=float)
    out = np.zeros_like(times)
    phase2 = (times >= config.phase1_end) & (times < config.phase2_end)
    phase3 = times >= config.phase2_end
    if np.any(phase2):
        out[phase2] = config.dtau_law(times[phase2])
    if np.any(phase3):
        out[phase3] = config.dtau_law(config.phase2_end)
    return out


def generate_synthetic(config: TruthConfig, rng: RngStream) -> StrainSeries:
    """Simulate the full phase-labeled strain record."""
    times = np.arange(0.0, config.end_time + 0.5 * config.interval, config.interval)
    try:
        dtau = true_dtau(config, times)
    except ValueError as exc:
        raise DataError(f"deterioration law unusable over phase 2: {exc}") from exc
    if np.any(dtau < 0.0):
        raise DataError("deterioration law produced negative thickness loss")
    if np.any(config.kappa_eps * dtau >= config.geometry.tau):
        raise DataError(
            "deterioration consumes the whole section; reduce the law's amplitude"
        )
    try:
        clean = emulator_strain(config.geometry, config.kappa_eps, config.e_true, dtau)
    except SingularSectionError as exc:
        raise DataError(str(exc)) from exc

    gen = rng.generator if isinstance(rng, RngStream) else rng
    noise = (
        config.noise_sigma * gen.standard_normal(times.shape)
        if config.noise_sigma > 0.0
        else np.zeros_like(times)
    )
    phases = np.where(
        times < config.phase1_end, 1, np.where(times < config.phase2_end, 2, 3)
    )
    return StrainSeries(times, clean + noise, phases)
