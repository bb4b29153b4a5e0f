"""Observation models for a corroding specimen under three-point bending.

Three interchangeable model kinds predict the gauge strain (and the peak
von Mises demand used for reliability checks) as functions of the Young's
modulus E and the thickness loss dtau:

* ``analytical`` -- thin-beam bending formula with uniform section loss;
* ``emulator`` -- the same kinematics with two shape coefficients:
  ``kappa_eps`` scales how much of the nominal loss is structurally
  effective, ``kappa_sig`` amplifies the peak stress to mimic local
  concentration around a corroded patch;
* ``surrogate`` -- bivariate polynomial response surfaces fitted to the
  emulator over a rectangular design grid.

Units are N-mm-MPa internally; E enters in GPa and strain is reported in
microstrain.
"""

import json
import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import ConfigError, SingularSectionError, SurrogateRangeError

__all__ = [
    "Geometry",
    "PolySurrogate",
    "ModelCandidate",
    "beam_strain",
    "emulator_strain",
    "emulator_vm_stress",
    "doe_grid",
    "monomial_powers",
    "fit_surrogate",
    "surrogate_eval",
    "fit_candidate_surrogates",
    "predict_strain",
    "predict_demand",
    "SURROGATE_R2_MIN",
]

GPA_TO_MPA = 1.0e3
TO_MICROSTRAIN = 1.0e6

# Weakest training fit accepted for a response surface.
SURROGATE_R2_MIN = 0.96


@dataclass(frozen=True)
class Geometry:
    """Specimen and rig dimensions (mm) and the applied load (N).

    Defaults describe the reference three-point-bending setup: ``l`` is the
    support span, ``l2`` the gauge-to-support distance, ``b1`` the section
    breadth, ``tau`` the intact thickness and ``load`` the transverse force
    (negative = downward).  ``l1``, ``l3`` and ``b2`` locate and size the
    exposed patch; they are carried for configuration completeness but do
    not enter the closed-form expressions.
    """

    l: float = 77.86
    l1: float = 21.27
    l2: float = 26.54
    l3: float = 32.24
    b1: float = 29.32
    b2: float = 25.56
    tau: float = 5.9
    load: float = -1000.0

    def __post_init__(self):
        for name in ("l", "l1", "l2", "l3", "b1", "b2", "tau"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"geometry length {name} must be positive")
        if self.load == 0.0:
            raise ValueError("applied load must be nonzero")


def _as_float_array(x, name):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def _scalar_or_array(out: np.ndarray):
    return float(out) if out.ndim == 0 else out


def beam_strain(geometry: Geometry, e_gpa, dtau):
    """Gauge strain (microstrain) of the uniformly thinned beam.

    Implements ``eps = 3 P l2 / ((tau - dtau)^2 b1 E)``; the sign follows the
    load and |eps| grows with dtau.
    """
    e = _as_float_array(e_gpa, "e_gpa")
    d = _as_float_array(dtau, "dtau")
    if np.any(e <= 0.0):
        raise ValueError("Young's modulus must be positive")
    if np.any(d < 0.0):
        raise ValueError("thickness loss must be nonnegative")
    if np.any(d >= geometry.tau):
        raise SingularSectionError(
            f"thickness loss reaches the intact thickness {geometry.tau} mm"
        )
    remaining = geometry.tau - d
    eps = (
        3.0
        * geometry.load
        * geometry.l2
        / (remaining**2 * geometry.b1 * (e * GPA_TO_MPA))
    )
    return _scalar_or_array(eps * TO_MICROSTRAIN)


def emulator_strain(geometry: Geometry, kappa_eps: float, e_gpa, dtau):
    """Strain of the emulator family: only ``kappa_eps * dtau`` of the loss
    is structurally effective.  ``kappa_eps = 1`` reproduces ``beam_strain``
    exactly.
    """
    if not 0.0 < kappa_eps <= 1.0:
        raise ValueError(f"kappa_eps must lie in (0, 1], got {kappa_eps}")
    d = _as_float_array(dtau, "dtau")
    if np.any(d < 0.0):
        raise ValueError("thickness loss must be nonnegative")
    return beam_strain(geometry, e_gpa, kappa_eps * d)


def emulator_vm_stress(geometry: Geometry, kappa_sig: float, dtau):
    """Peak von Mises demand (MPa): midspan bending stress at the thinned
    section amplified by the concentration coefficient ``kappa_sig``.
    Independent of E under linear elasticity.
    """
    if kappa_sig < 1.0:
        raise ValueError(f"kappa_sig must be >= 1, got {kappa_sig}")
    d = _as_float_array(dtau, "dtau")
    if np.any(d < 0.0):
        raise ValueError("thickness loss must be nonnegative")
    if np.any(d >= geometry.tau):
        raise SingularSectionError(
            f"thickness loss reaches the intact thickness {geometry.tau} mm"
        )
    remaining = geometry.tau - d
    sigma = kappa_sig * (3.0 * abs(geometry.load) * geometry.l / 2.0) / (
        geometry.b1 * remaining**2
    )
    return _scalar_or_array(sigma)


def doe_grid(e_range, dtau_range, n_per_dim: int) -> np.ndarray:
    """Full-factorial design grid of shape (n_per_dim**2, 2) over
    (E, dtau), including all four range corners.  E-major ordering.
    """
    if n_per_dim < 2:
        raise ValueError("n_per_dim must be at least 2")
    (e_lo, e_hi), (d_lo, d_hi) = e_range, dtau_range
    if not e_lo < e_hi:
        raise ValueError(f"degenerate E range [{e_lo}, {e_hi}]")
    if not d_lo < d_hi:
        raise ValueError(f"degenerate dtau range [{d_lo}, {d_hi}]")
    es = np.linspace(e_lo, e_hi, n_per_dim)
    ds = np.linspace(d_lo, d_hi, n_per_dim)
    return np.array(list(product(es, ds)), dtype=float)


def monomial_powers(degree: int) -> list[tuple[int, int]]:
    """Exponent pairs (a, b) with a + b <= degree, in graded-lex order."""
    powers = [
        (a, b)
        for a in range(degree + 1)
        for b in range(degree + 1)
        if a + b <= degree
    ]
    return sorted(powers, key=lambda ab: (ab[0] + ab[1], ab))


@dataclass(frozen=True)
class PolySurrogate:
    """Bivariate polynomial response surface in (E, dtau).

    Coefficients live in the normalized input box [-1, 1]^2 (ordered as
    ``monomial_powers(degree)``) to keep the least-squares problem
    well-conditioned; the affine map back to physical inputs is stored in
    ``e_range`` / ``dtau_range``.  Evaluation outside the trained ranges is
    an error, never an extrapolation.
    """

    degree: int
    coeffs: tuple[float, ...]
    e_range: tuple[float, float]
    dtau_range: tuple[float, float]
    r2: float

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("surrogate degree must be >= 1")
        n_terms = len(monomial_powers(self.degree))
        if len(self.coeffs) != n_terms:
            raise ValueError(
                f"degree {self.degree} needs {n_terms} coefficients, got {len(self.coeffs)}"
            )
        if self.r2 > 1.0 + 1e-12:
            raise ValueError(f"r2 cannot exceed 1, got {self.r2}")

    def _normalize(self, value, rng, name):
        lo, hi = rng
        v = np.asarray(value, dtype=float)
        slack = 1e-9 * (hi - lo)  # float-noise guard, not extrapolation
        if np.any(v < lo - slack) or np.any(v > hi + slack):
            raise SurrogateRangeError(
                f"{name} outside trained range [{lo}, {hi}]"
            )
        return 2.0 * (v - lo) / (hi - lo) - 1.0

    def __call__(self, e_gpa, dtau):
        x = self._normalize(e_gpa, self.e_range, "E")
        y = self._normalize(dtau, self.dtau_range, "dtau")
        x, y = np.broadcast_arrays(x, y)
        out = np.zeros_like(x, dtype=float)
        for (a, b), c in zip(monomial_powers(self.degree), self.coeffs):
            out += c * x**a * y**b
        return _scalar_or_array(out)

    def to_json_dict(self) -> dict:
        return {
            "degree": self.degree,
            "e_range": list(self.e_range),
            "dtau_range": list(self.dtau_range),
            "coeffs_graded_lex": list(self.coeffs),
            "r2": self.r2,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "PolySurrogate":
        return cls(
            degree=int(d["degree"]),
            coeffs=tuple(float(c) for c in d["coeffs_graded_lex"]),
            e_range=tuple(float(v) for v in d["e_range"]),
            dtau_range=tuple(float(v) for v in d["dtau_range"]),
            r2=float(d["r2"]),
        )

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json_dict(), f, indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "PolySurrogate":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_json_dict(json.load(f))


def _span_check(points: np.ndarray, degree: int):
    # Name the input dimension that cannot support the requested degree.
    for idx, name in ((0, "E"), (1, "dtau")):
        if len(np.unique(points[:, idx])) < degree + 1:
            raise ValueError(
                f"design points do not span the {name} dimension "
                f"(need at least {degree + 1} distinct values)"
            )


def fit_surrogate(points, values, degree: int, weights=None) -> PolySurrogate:
    """Least-squares polynomial fit over the graded-lex monomial basis.

    ``points`` is (n, 2) in (E, dtau); ``weights`` optionally scales the
    residual of each point (e.g. ``1/|y|`` for a relative-error fit).  The
    reported r2 is always the unweighted coefficient of determination on
    the training points.
    """
    pts = np.asarray(points, dtype=float)
    y = np.asarray(values, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must have shape (n, 2)")
    if len(y) != len(pts):
        raise ValueError("points and values must have equal length")
    terms = monomial_powers(degree)
    if len(pts) < len(terms):
        raise ValueError(
            f"need at least {len(terms)} points for degree {degree}, got {len(pts)}"
        )
    _span_check(pts, degree)

    e_range = (float(pts[:, 0].min()), float(pts[:, 0].max()))
    dtau_range = (float(pts[:, 1].min()), float(pts[:, 1].max()))
    x = 2.0 * (pts[:, 0] - e_range[0]) / (e_range[1] - e_range[0]) - 1.0
    yn = 2.0 * (pts[:, 1] - dtau_range[0]) / (dtau_range[1] - dtau_range[0]) - 1.0
    design = np.column_stack([x**a * yn**b for a, b in terms])

    if weights is not None:
        w = np.asarray(weights, dtype=float)
        if w.shape != y.shape or np.any(w <= 0.0):
            raise ValueError("weights must be positive and match values")
        coeffs, _, rank, _ = np.linalg.lstsq(design * w[:, None], y * w, rcond=None)
    else:
        coeffs, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < len(terms):
        raise ValueError(
            "rank-deficient design matrix (design points are collinear in the "
            "(E, dtau) plane)"
        )

    pred = design @ coeffs
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res == 0.0 else -math.inf
    else:
        r2 = 1.0 - ss_res / ss_tot
    return PolySurrogate(
        degree=degree,
        coeffs=tuple(float(c) for c in coeffs),
        e_range=e_range,
        dtau_range=dtau_range,
        r2=r2,
    )


def surrogate_eval(s: PolySurrogate, e_gpa, dtau):
    """Evaluate a fitted response surface; out-of-range input is an error."""
    return s(e_gpa, dtau)


@dataclass(frozen=True)
class ModelCandidate:
    """One member of the observation-model pool.

    ``dtau_max`` bounds the admissible thickness loss (also the training
    range of any attached surrogates), ``e_range`` bounds the Young's
    modulus, and ``e_map`` is filled in by the system-identification stage
    before the diagnosis/prognosis tasks run.  Emulator coefficients are
    required for the ``emulator`` kind and for training surrogates of the
    ``surrogate`` kind.
    """

    id: str
    kind: str
    dtau_max: float
    e_range: tuple[float, float] = (170.0, 238.0)
    is_oracle: bool = False
    e_map: float | None = None
    kappa_eps: float | None = None
    kappa_sig: float | None = None
    geometry: Geometry | None = None
    strain_surrogate: PolySurrogate | None = None
    demand_surrogate: PolySurrogate | None = None

    def __post_init__(self):
        if self.kind not in ("analytical", "emulator", "surrogate"):
            raise ConfigError(f"unknown model kind {self.kind!r} for {self.id}")
        if self.dtau_max <= 0.0:
            raise ConfigError(f"{self.id}: dtau_max must be positive")
        lo, hi = self.e_range
        if not lo < hi:
            raise ConfigError(f"{self.id}: degenerate E range [{lo}, {hi}]")
        if self.kind in ("emulator", "surrogate"):
            if self.kappa_eps is None or self.kappa_sig is None:
                raise ConfigError(
                    f"{self.id}: kind {self.kind!r} requires kappa_eps and kappa_sig"
                )
            if not 0.0 < self.kappa_eps <= 1.0:
                raise ConfigError(f"{self.id}: kappa_eps must lie in (0, 1]")
            if self.kappa_sig < 1.0:
                raise ConfigError(f"{self.id}: kappa_sig must be >= 1")

    def _require_geometry(self) -> Geometry:
        if self.geometry is None:
            raise ConfigError(f"{self.id}: candidate needs a geometry")
        return self.geometry

    def _require_surrogates(self):
        if self.strain_surrogate is None or self.demand_surrogate is None:
            raise ConfigError(
                f"{self.id}: surrogate candidate has no trained response surfaces"
            )


def _check_candidate_inputs(candidate: ModelCandidate, dtau, e_gpa=None):
    d = np.asarray(dtau, dtype=float)
    slack = 1e-9 * candidate.dtau_max
    if np.any(d < -slack) or np.any(d > candidate.dtau_max + slack):
        raise ValueError(
            f"{candidate.id}: dtau outside [0, {candidate.dtau_max}]"
        )
    if e_gpa is not None:
        e = np.asarray(e_gpa, dtype=float)
        lo, hi = candidate.e_range
        eslack = 1e-9 * (hi - lo)
        if np.any(e < lo - eslack) or np.any(e > hi + eslack):
            raise ValueError(f"{candidate.id}: E outside [{lo}, {hi}] GPa")


def predict_strain(candidate: ModelCandidate, e_gpa, dtau):
    """Route a strain prediction to the candidate's model kind."""
    _check_candidate_inputs(candidate, dtau, e_gpa)
    if candidate.kind == "analytical":
        return beam_strain(candidate._require_geometry(), e_gpa, dtau)
    if candidate.kind == "emulator":
        return emulator_strain(
            candidate._require_geometry(), candidate.kappa_eps, e_gpa, dtau
        )
    candidate._require_surrogates()
    return candidate.strain_surrogate(e_gpa, dtau)


def predict_demand(candidate: ModelCandidate, dtau):
    """Route a peak von Mises demand prediction to the candidate's kind.

    The analytical kind uses the plain bending stress (no concentration);
    demand surrogates are evaluated at mid-range E since the underlying
    quantity does not depend on E.
    """
    _check_candidate_inputs(candidate, dtau)
    if candidate.kind == "analytical":
        return emulator_vm_stress(candidate._require_geometry(), 1.0, dtau)
    if candidate.kind == "emulator":
        return emulator_vm_stress(
            candidate._require_geometry(), candidate.kappa_sig, dtau
        )
    candidate._require_surrogates()
    e_mid = 0.5 * (candidate.e_range[0] + candidate.e_range[1])
    return candidate.demand_surrogate(e_mid, dtau)


def fit_candidate_surrogates(
    candidate: ModelCandidate,
    geometry: Geometry,
    n_per_dim: int = 6,
    strain_degree: int = 2,
    demand_degree: int = 3,
    relative_weighting: bool = True,
) -> tuple[PolySurrogate, PolySurrogate]:
    """Train (strain, demand) response surfaces against the candidate's
    emulator over its E range and [0, dtau_max].

    Relative weighting (residuals scaled by 1/|y|) is on by default: the
    strain magnitude spans a wide range over the box and the acceptance
    metric for surrogates is relative error.
    """
    if candidate.kappa_eps is None or candidate.kappa_sig is None:
        raise ConfigError(f"{candidate.id}: no emulator coefficients to train against")
    grid = doe_grid(candidate.e_range, (0.0, candidate.dtau_max), n_per_dim)
    strain = emulator_strain(geometry, candidate.kappa_eps, grid[:, 0], grid[:, 1])
    demand = emulator_vm_stress(geometry, candidate.kappa_sig, grid[:, 1])
    w_strain = 1.0 / np.abs(strain) if relative_weighting else None
    w_demand = 1.0 / np.abs(demand) if relative_weighting else None
    strain_sur = fit_surrogate(grid, strain, strain_degree, weights=w_strain)
    demand_sur = fit_surrogate(grid, demand, demand_degree, weights=w_demand)
    return strain_sur, demand_sur
