"""Study configuration: candidate pool, truth model, sampler and weights.

The on-disk format is a single TOML document; ``default_config()`` returns
the built-in study (five candidates, power-law truth) and every field can
be overridden from file.  Unknown keys are rejected so typos fail loudly.
"""

from dataclasses import dataclass, field, replace

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .assessment import LimitState, UtilityWeights
from .deterioration import LogisticParams, PowerLawParams
from .distributions import Normal
from .errors import ConfigError
from .structural import Geometry, ModelCandidate
from .synthetic import TruthConfig

__all__ = [
    "SamplerSettings",
    "SurrogateSettings",
    "StudyConfig",
    "default_config",
    "load_config",
    "config_from_dict",
]

DEFAULT_SEED = 20260801

_DEFAULT_CANDIDATES = (
    # id, kind, dtau_max, kappa_eps, kappa_sig
    ("M1", "analytical", 1.0, None, None),
    ("M2", "surrogate", 1.0, 0.90, 1.6),
    ("M3", "emulator", 1.4, 0.80, 2.2),
    ("M4", "surrogate", 1.0, 0.90, 1.3),
    ("M5", "surrogate", 1.4, 0.80, 1.4),
)


@dataclass(frozen=True)
class SamplerSettings:
    n_chains: int = 8
    n_warmup: int = 2000
    n_samples: int = 2000

    def __post_init__(self):
        if self.n_chains < 2:
            raise ConfigError("sampler needs at least 2 chains")
        if self.n_warmup < 100 or self.n_samples < 100:
            raise ConfigError("n_warmup and n_samples must each be at least 100")


@dataclass(frozen=True)
class SurrogateSettings:
    n_per_dim: int = 6
    strain_degree: int = 2
    demand_degree: int = 3
    r2_min: float = 0.96
    relative_weighting: bool = True

    def __post_init__(self):
        if self.n_per_dim < 2:
            raise ConfigError("surrogate n_per_dim must be at least 2")
        if self.strain_degree < 1 or self.demand_degree < 1:
            raise ConfigError("surrogate degrees must be at least 1")


@dataclass(frozen=True)
class StudyConfig:
    seed: int = DEFAULT_SEED
    oracle: str = "M3"
    data_attribute: str = "loglik"
    nmse_variant: str = "paper"
    train_split_min: float = 800.0
    single_chain: bool = False
    weights: UtilityWeights = field(default_factory=lambda: UtilityWeights(0.5, 0.5))
    sampler: SamplerSettings = field(default_factory=SamplerSettings)
    sampler_overrides: dict = field(default_factory=dict)
    limit_state: LimitState = field(default_factory=LimitState)
    geometry: Geometry = field(default_factory=Geometry)
    truth: TruthConfig = field(default_factory=TruthConfig)
    prognosis_t0: float = 200.0
    prognosis_dt_ts: float = 900.0
    oracle_full_train: bool = True
    n_rep: int = 1000
    surrogate: SurrogateSettings = field(default_factory=SurrogateSettings)
    candidates: tuple = ()

    def __post_init__(self):
        if self.data_attribute not in ("loglik", "nmse"):
            raise ConfigError(f"unknown data_attribute {self.data_attribute!r}")
        if self.nmse_variant not in ("paper", "squared"):
            raise ConfigError(f"unknown nmse_variant {self.nmse_variant!r}")
        if self.n_rep < 100:
            raise ConfigError("n_rep must be at least 100")
        if not self.candidates:
            object.__setattr__(self, "candidates", _default_pool(self.geometry))
        ids = [c.id for c in self.candidates]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"duplicate candidate ids: {ids}")
        if self.oracle not in ids:
            raise ConfigError(f"oracle {self.oracle!r} not in candidate pool {ids}")
        # Stamp the oracle flag so the pool is self-describing.
        object.__setattr__(
            self,
            "candidates",
            tuple(
                replace(c, is_oracle=(c.id == self.oracle)) for c in self.candidates
            ),
        )
        if not (0.0 < self.train_split_min < self.truth.end_time):
            raise ConfigError("train_split_min must lie inside the record span")

    def sampler_for(self, task_kind: str) -> SamplerSettings:
        return self.sampler_overrides.get(task_kind, self.sampler)

    def candidate(self, cand_id: str) -> ModelCandidate:
        for c in self.candidates:
            if c.id == cand_id:
                return c
        raise ConfigError(f"unknown candidate {cand_id!r}")


def _default_pool(geometry: Geometry) -> tuple:
    pool = []
    for cid, kind, dtau_max, keps, ksig in _DEFAULT_CANDIDATES:
        pool.append(
            ModelCandidate(
                id=cid,
                kind=kind,
                dtau_max=dtau_max,
                kappa_eps=keps,
                kappa_sig=ksig,
                geometry=geometry,
            )
        )
    return tuple(pool)


def _take(table: dict, allowed: set, where: str) -> dict:
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    return table


def _geometry_from(table: dict) -> Geometry:
    allowed = {"l", "l1", "l2", "l3", "b1", "b2", "tau", "load"}
    _take(table, allowed, "[geometry]")
    try:
        return Geometry(**{k: float(v) for k, v in table.items()})
    except ValueError as exc:
        raise ConfigError(f"[geometry]: {exc}") from exc


def _truth_from(table: dict, geometry: Geometry) -> TruthConfig:
    allowed = {
        "e_gpa", "noise_sigma", "kind", "alpha", "beta", "gamma", "t0", "dt_ts",
        "phase1_end", "phase2_end", "end_time", "interval", "kappa_eps", "kappa_sig",
    }
    _take(table, allowed, "[truth]")
    kind = table.get("kind", "powerlaw")
    defaults = TruthConfig()
    try:
        if kind == "powerlaw":
            law = PowerLawParams(
                alpha=float(table.get("alpha", 0.8)),
                beta=float(table.get("beta", 1.0)),
                t0=float(table.get("t0", 200.0)),
                dt_ts=float(table.get("dt_ts", 900.0)),
            )
        elif kind == "logistic":
            if "gamma" not in table:
                raise ConfigError("[truth]: logistic law needs gamma")
            law = LogisticParams(
                alpha=float(table.get("alpha", 0.0)),
                beta=float(table.get("beta", 0.01)),
                gamma=float(table["gamma"]),
            )
        else:
            raise ConfigError(f"[truth]: unknown deterioration kind {kind!r}")
        return TruthConfig(
            geometry=geometry,
            e_true=float(table.get("e_gpa", defaults.e_true)),
            deterioration=law,
            noise_sigma=float(table.get("noise_sigma", defaults.noise_sigma)),
            phase1_end=float(table.get("phase1_end", defaults.phase1_end)),
            phase2_end=float(table.get("phase2_end", defaults.phase2_end)),
            end_time=float(table.get("end_time", defaults.end_time)),
            interval=float(table.get("interval", defaults.interval)),
            kappa_eps=float(table.get("kappa_eps", defaults.kappa_eps)),
            kappa_sig=float(table.get("kappa_sig", defaults.kappa_sig)),
        )
    except ValueError as exc:
        raise ConfigError(f"[truth]: {exc}") from exc


# Deterioration posteriors are much harder to explore than the two-parameter
# tasks (plateau-and-needle geometry, curved rate/exponent trade-off,
# boundary pile-ups), so the default study gives prognosis a longer warm-up
# and substantially more retained draws.
_DEFAULT_PROGNOSIS_SAMPLER = SamplerSettings(n_chains=8, n_warmup=6000, n_samples=10000)


def _sampler_from(table: dict) -> tuple[SamplerSettings, dict]:
    allowed = {"n_chains", "n_warmup", "n_samples", "sysid", "diagnosis", "prognosis"}
    _take(table, allowed, "[sampler]")
    if not table:
        return SamplerSettings(), {"prognosis": _DEFAULT_PROGNOSIS_SAMPLER}
    base_kwargs = {
        k: int(table[k]) for k in ("n_chains", "n_warmup", "n_samples") if k in table
    }
    base = SamplerSettings(**base_kwargs)
    overrides = {}
    for task_kind in ("sysid", "diagnosis", "prognosis"):
        if task_kind in table:
            sub = table[task_kind]
            _take(sub, {"n_chains", "n_warmup", "n_samples"}, f"[sampler.{task_kind}]")
            merged = dict(base_kwargs)
            merged.update({k: int(v) for k, v in sub.items()})
            overrides[task_kind] = SamplerSettings(**merged)
    return base, overrides


def _candidates_from(entries: list, geometry: Geometry) -> tuple:
    allowed = {"id", "kind", "dtau_max", "e_range", "kappa_eps", "kappa_sig"}
    pool = []
    for entry in entries:
        _take(entry, allowed, "[[candidates]]")
        if "id" not in entry or "kind" not in entry or "dtau_max" not in entry:
            raise ConfigError("[[candidates]]: id, kind and dtau_max are required")
        e_range = entry.get("e_range", (170.0, 238.0))
        if len(e_range) != 2:
            raise ConfigError(f"[[candidates]] {entry['id']}: e_range needs two values")
        pool.append(
            ModelCandidate(
                id=str(entry["id"]),
                kind=str(entry["kind"]),
                dtau_max=float(entry["dtau_max"]),
                e_range=(float(e_range[0]), float(e_range[1])),
                kappa_eps=float(entry["kappa_eps"]) if "kappa_eps" in entry else None,
                kappa_sig=float(entry["kappa_sig"]) if "kappa_sig" in entry else None,
                geometry=geometry,
            )
        )
    return tuple(pool)


def config_from_dict(doc: dict) -> StudyConfig:
    """Build a StudyConfig from a parsed TOML document (all keys optional)."""
    allowed = {
        "seed", "study", "weights", "sampler", "limit_state", "geometry",
        "truth", "prognosis", "surrogate", "candidates",
    }
    _take(doc, allowed, "the top level")

    geometry = _geometry_from(dict(doc.get("geometry", {})))
    truth = _truth_from(dict(doc.get("truth", {})), geometry)

    study = dict(doc.get("study", {}))
    _take(
        study,
        {"oracle", "data_attribute", "nmse_variant", "train_split_min", "single_chain"},
        "[study]",
    )

    weights_tbl = dict(doc.get("weights", {}))
    _take(weights_tbl, {"w1", "w2"}, "[weights]")
    w1 = float(weights_tbl.get("w1", 0.5))
    w2 = float(weights_tbl.get("w2", 1.0 - w1))
    try:
        weights = UtilityWeights(w1, w2)
    except ValueError as exc:
        raise ConfigError(f"[weights]: {exc}") from exc

    sampler, overrides = _sampler_from(dict(doc.get("sampler", {})))

    ls_tbl = dict(doc.get("limit_state", {}))
    _take(ls_tbl, {"yield_mean_mpa", "yield_sd_mpa"}, "[limit_state]")
    try:
        limit_state = LimitState(
            Normal(
                float(ls_tbl.get("yield_mean_mpa", 284.5)),
                float(ls_tbl.get("yield_sd_mpa", 21.5)),
            )
        )
    except ValueError as exc:
        raise ConfigError(f"[limit_state]: {exc}") from exc

    prog = dict(doc.get("prognosis", {}))
    _take(prog, {"t0", "dt_ts", "oracle_full_train", "n_rep"}, "[prognosis]")

    sur_tbl = dict(doc.get("surrogate", {}))
    _take(
        sur_tbl,
        {"n_per_dim", "strain_degree", "demand_degree", "r2_min", "relative_weighting"},
        "[surrogate]",
    )
    surrogate = SurrogateSettings(
        n_per_dim=int(sur_tbl.get("n_per_dim", 6)),
        strain_degree=int(sur_tbl.get("strain_degree", 2)),
        demand_degree=int(sur_tbl.get("demand_degree", 3)),
        r2_min=float(sur_tbl.get("r2_min", 0.96)),
        relative_weighting=bool(sur_tbl.get("relative_weighting", True)),
    )

    candidates = _candidates_from(list(doc.get("candidates", [])), geometry)

    return StudyConfig(
        seed=int(doc.get("seed", DEFAULT_SEED)),
        oracle=str(study.get("oracle", "M3")),
        data_attribute=str(study.get("data_attribute", "loglik")),
        nmse_variant=str(study.get("nmse_variant", "paper")),
        train_split_min=float(study.get("train_split_min", 800.0)),
        single_chain=bool(study.get("single_chain", False)),
        weights=weights,
        sampler=sampler,
        sampler_overrides=overrides,
        limit_state=limit_state,
        geometry=geometry,
        truth=truth,
        prognosis_t0=float(prog.get("t0", 200.0)),
        prognosis_dt_ts=float(prog.get("dt_ts", 900.0)),
        oracle_full_train=bool(prog.get("oracle_full_train", True)),
        n_rep=int(prog.get("n_rep", 1000)),
        surrogate=surrogate,
        candidates=candidates,
    )


def default_config() -> StudyConfig:
    return config_from_dict({})


def load_config(path) -> StudyConfig:
    try:
        with open(path, "rb") as f:
            doc = tomllib.load(f)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(doc)
