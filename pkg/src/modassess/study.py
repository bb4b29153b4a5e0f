"""End-to-end task orchestration and artifact management.

Stages communicate only through files inside an output directory:

* ``generate``      -> synthetic.csv
* ``fit-surrogate`` -> surrogates/<id>_{strain,demand}.json
* ``sysid``         -> sysid/<id>_posterior.csv + sysid/report.json
* ``diagnose``      -> diagnosis/...           (needs sysid's MAP table)
* ``prognose``      -> prognosis-{logistic,powerlaw}/... incl. predictive bands
* ``assess-<task>`` -> assess-<task>/utility_report.{json,csv}
* ``report``        -> summary.json

All randomness is derived from the config seed through fixed stage codes,
so rerunning a stage with the same config reproduces its artifacts byte
for byte.
"""

import json
from dataclasses import replace
from pathlib import Path

import numpy as np

from .assessment import assess_candidates
from .config import StudyConfig
from .distributions import RngStream
from .errors import ConfigError, ConvergenceError, DependencyError
from .inference import (
    RHAT_THRESHOLD,
    ConvergenceReport,
    PosteriorDraws,
    TaskSpec,
    make_log_posterior,
    map_estimate,
    posterior_predictive,
    run_mcmc,
)
from .series import load_csv, split_phases, split_train_forecast, write_csv
from .structural import PolySurrogate, fit_candidate_surrogates
from .synthetic import generate_synthetic

__all__ = ["run_task", "TASK_NAMES"]

# Stage codes for seed derivation; values are stable identifiers, not order.
_STAGE_GENERATE = 0
_STAGE_SYSID = 2
_STAGE_DIAGNOSIS = 3
_STAGE_PROGNOSIS = {"logistic": 4, "powerlaw": 5}
_STAGE_PREDICTIVE = 6
_ORACLE_FULL_OFFSET = 1000  # candidate-index offset for full-record runs

TASK_NAMES = (
    "generate",
    "fit-surrogate",
    "sysid",
    "diagnose",
    "prognose",
    "assess-sysid",
    "assess-diagnosis",
    "assess-prognosis-logistic",
    "assess-prognosis-powerlaw",
    "report",
)


def _derive_seed(master: int, *keys: int) -> int:
    ss = np.random.SeedSequence(entropy=master, spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def _read_json(path: Path) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def _synthetic_path(out_dir: Path) -> Path:
    return out_dir / "synthetic.csv"


def _load_series(out_dir: Path):
    path = _synthetic_path(out_dir)
    if not path.exists():
        raise DependencyError(
            f"{path} missing: run the `generate` command first"
        )
    return load_csv(path)


def run_generate(config: StudyConfig, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = RngStream(_derive_seed(config.seed, _STAGE_GENERATE))
    series = generate_synthetic(config.truth, rng)
    path = _synthetic_path(out_dir)
    write_csv(series, path)
    return path


def run_fit_surrogate(config: StudyConfig, out_dir: Path) -> dict:
    sur_dir = out_dir / "surrogates"
    sur_dir.mkdir(parents=True, exist_ok=True)
    settings = config.surrogate
    summary = {}
    for cand in config.candidates:
        if cand.kind != "surrogate":
            continue
        strain_sur, demand_sur = fit_candidate_surrogates(
            cand,
            config.geometry,
            n_per_dim=settings.n_per_dim,
            strain_degree=settings.strain_degree,
            demand_degree=settings.demand_degree,
            relative_weighting=settings.relative_weighting,
        )
        for label, sur in (("strain", strain_sur), ("demand", demand_sur)):
            if sur.r2 < settings.r2_min:
                raise ConfigError(
                    f"{cand.id} {label} surrogate r2={sur.r2:.4f} below the "
                    f"acceptance threshold {settings.r2_min}; raise the degree "
                    "or the design density"
                )
            sur.save(sur_dir / f"{cand.id}_{label}.json")
        summary[cand.id] = {"strain_r2": strain_sur.r2, "demand_r2": demand_sur.r2}
    _write_json(sur_dir / "training.json", summary)
    return summary


def _attach_surrogates(config: StudyConfig, out_dir: Path, cand):
    if cand.kind != "surrogate":
        return cand
    sur_dir = out_dir / "surrogates"
    paths = (sur_dir / f"{cand.id}_strain.json", sur_dir / f"{cand.id}_demand.json")
    for p in paths:
        if not p.exists():
            raise DependencyError(
                f"{p} missing: run the `fit-surrogate` command first"
            )
    strain_sur = PolySurrogate.load(paths[0])
    demand_sur = PolySurrogate.load(paths[1])
    for label, sur in (("strain", strain_sur), ("demand", demand_sur)):
        if sur.r2 < config.surrogate.r2_min:
            raise ConfigError(
                f"{cand.id} {label} surrogate r2={sur.r2:.4f} below threshold"
            )
    return replace(cand, strain_surrogate=strain_sur, demand_surrogate=demand_sur)


def _e_map_table(out_dir: Path) -> dict:
    report_path = out_dir / "sysid" / "report.json"
    if not report_path.exists():
        raise DependencyError(
            f"{report_path} missing: run the `sysid` command first"
        )
    report = _read_json(report_path)
    return {
        cid: float(entry["map"]["e_gpa"])
        for cid, entry in report["candidates"].items()
    }


def _pool(config: StudyConfig, out_dir: Path, with_e_map: bool):
    candidates = [_attach_surrogates(config, out_dir, c) for c in config.candidates]
    if with_e_map:
        e_maps = _e_map_table(out_dir)
        missing = [c.id for c in candidates if c.id not in e_maps]
        if missing:
            raise DependencyError(
                f"sysid MAP table lacks candidates {missing}: rerun `sysid`"
            )
        candidates = [replace(c, e_map=e_maps[c.id]) for c in candidates]
    return candidates


def _run_inference_stage(
    config: StudyConfig,
    out_dir: Path,
    stage_dir: Path,
    task: TaskSpec,
    candidates,
    data,
    stage_code: int,
    extra_runs=(),
) -> dict:
    """Run MCMC for every candidate, write posteriors and the stage report,
    then enforce the convergence gate."""
    stage_dir.mkdir(parents=True, exist_ok=True)
    settings = config.sampler_for(task.kind)
    entries = {}
    failed = []

    runs = [(cand, idx, "") for idx, cand in enumerate(candidates)]
    runs += list(extra_runs)
    for cand, cand_idx, suffix in runs:
        target = make_log_posterior(task, cand, data)
        posterior, report = run_mcmc(
            target,
            target.space,
            n_chains=settings.n_chains,
            n_warmup=settings.n_warmup,
            n_samples=settings.n_samples,
            seed=_derive_seed(config.seed, stage_code, cand_idx),
        )
        csv_name = f"{cand.id}{suffix}_posterior.csv"
        posterior.to_csv(stage_dir / csv_name)
        theta_map = map_estimate(posterior)
        entries[cand.id + suffix] = {
            "posterior_csv": csv_name,
            "convergence": report.to_dict(),
            "accept_rates": [float(a) for a in posterior.accept_rates],
            "map": {
                name: float(v) for name, v in zip(posterior.names, theta_map)
            },
            "map_log_posterior": float(np.max(posterior.log_posterior)),
        }
        if not report.passed:
            failed.append(cand.id + suffix)

    _write_json(
        stage_dir / "report.json",
        {
            "task": task.name,
            "seed": config.seed,
            "settings": {
                "n_chains": settings.n_chains,
                "n_warmup": settings.n_warmup,
                "n_samples": settings.n_samples,
            },
            "candidates": entries,
        },
    )
    if failed:
        raise ConvergenceError(
            f"{task.name}: convergence gate failed for {failed} "
            f"(split R-hat >= {RHAT_THRESHOLD})"
        )
    return entries


def run_sysid(config: StudyConfig, out_dir: Path) -> dict:
    series = _load_series(out_dir)
    phase1, _, _ = split_phases(series, config.truth.phase1_end, config.truth.phase2_end)
    candidates = _pool(config, out_dir, with_e_map=False)
    task = TaskSpec("sysid")
    return _run_inference_stage(
        config, out_dir, out_dir / "sysid", task, candidates, phase1, _STAGE_SYSID
    )


def run_diagnose(config: StudyConfig, out_dir: Path) -> dict:
    series = _load_series(out_dir)
    _, _, phase3 = split_phases(series, config.truth.phase1_end, config.truth.phase2_end)
    candidates = _pool(config, out_dir, with_e_map=True)
    task = TaskSpec("diagnosis")
    return _run_inference_stage(
        config, out_dir, out_dir / "diagnosis", task, candidates, phase3, _STAGE_DIAGNOSIS
    )


def run_prognose(config: StudyConfig, out_dir: Path) -> dict:
    series = _load_series(out_dir)
    train, forecast = split_train_forecast(
        series, config.train_split_min, t_min=config.truth.phase1_end
    )
    candidates = _pool(config, out_dir, with_e_map=True)
    oracle = next(c for c in candidates if c.is_oracle)
    full = series.select(series.times >= config.truth.phase1_end)

    results = {}
    for det, stage_code in _STAGE_PROGNOSIS.items():
        task = TaskSpec(
            "prognosis",
            deterioration=det,
            t0=config.prognosis_t0,
            dt_ts=config.prognosis_dt_ts,
        )
        stage_dir = out_dir / f"prognosis-{det}"
        extra = []
        if config.oracle_full_train:
            oracle_idx = candidates.index(oracle)
            extra.append((oracle, oracle_idx + _ORACLE_FULL_OFFSET, "_full"))
        # The gate may veto; write bands only for candidates that passed.
        entries = _run_inference_stage(
            config, out_dir, stage_dir, task, candidates, train, stage_code, extra
        )
        for idx, cand in enumerate(candidates):
            posterior = PosteriorDraws.from_csv(stage_dir / f"{cand.id}_posterior.csv")
            bands = posterior_predictive(
                task,
                cand,
                posterior,
                forecast.times,
                n_rep=config.n_rep,
                rng=RngStream(_derive_seed(config.seed, _STAGE_PREDICTIVE, stage_code, idx)),
            )
            bands.to_csv(stage_dir / f"{cand.id}_bands.csv")
        if config.oracle_full_train:
            posterior = PosteriorDraws.from_csv(
                stage_dir / f"{oracle.id}_full_posterior.csv"
            )
            bands = posterior_predictive(
                task,
                oracle,
                posterior,
                full.times,
                n_rep=config.n_rep,
                rng=RngStream(
                    _derive_seed(
                        config.seed,
                        _STAGE_PREDICTIVE,
                        stage_code,
                        _ORACLE_FULL_OFFSET,
                    )
                ),
            )
            bands.to_csv(stage_dir / f"{oracle.id}_full_bands.csv")
        results[det] = entries
    return results


def _load_stage_posteriors(stage_dir: Path, candidates, oracle_suffix: str = ""):
    report_path = stage_dir / "report.json"
    if not report_path.exists():
        raise DependencyError(
            f"{report_path} missing: run the `{stage_dir.name.split('-')[0]}` "
            "command first"
        )
    report = _read_json(report_path)
    posteriors = {}
    for cand in candidates:
        key = cand.id + (oracle_suffix if cand.is_oracle else "")
        if key not in report["candidates"]:
            raise DependencyError(
                f"{report_path} lacks entry {key!r}: rerun the stage"
            )
        entry = report["candidates"][key]
        posterior = PosteriorDraws.from_csv(stage_dir / entry["posterior_csv"])
        convergence = ConvergenceReport.from_dict(entry["convergence"])
        posteriors[cand.id] = (posterior, convergence)
    return posteriors


def run_assess(config: StudyConfig, out_dir: Path, assess_task: str) -> dict:
    series = _load_series(out_dir)
    phase1, _, phase3 = split_phases(
        series, config.truth.phase1_end, config.truth.phase2_end
    )

    if assess_task == "sysid":
        task = TaskSpec("sysid")
        candidates = _pool(config, out_dir, with_e_map=False)
        data = phase1
        posteriors = _load_stage_posteriors(out_dir / "sysid", candidates)
    elif assess_task == "diagnosis":
        task = TaskSpec("diagnosis")
        candidates = _pool(config, out_dir, with_e_map=True)
        data = phase3
        posteriors = _load_stage_posteriors(out_dir / "diagnosis", candidates)
    elif assess_task in ("prognosis-logistic", "prognosis-powerlaw"):
        det = assess_task.split("-", 1)[1]
        task = TaskSpec(
            "prognosis",
            deterioration=det,
            t0=config.prognosis_t0,
            dt_ts=config.prognosis_dt_ts,
        )
        candidates = _pool(config, out_dir, with_e_map=True)
        _, data = split_train_forecast(
            series, config.train_split_min, t_min=config.truth.phase1_end
        )
        suffix = "_full" if config.oracle_full_train else ""
        posteriors = _load_stage_posteriors(
            out_dir / f"prognosis-{det}", candidates, oracle_suffix=suffix
        )
    else:
        raise ConfigError(f"unknown assessment task {assess_task!r}")

    report = assess_candidates(
        candidates,
        posteriors,
        data,
        task,
        config.limit_state,
        config.weights,
        data_attribute=config.data_attribute,
        nmse_variant=config.nmse_variant,
        chain=0 if config.single_chain else None,
    )
    assess_dir = out_dir / f"assess-{assess_task}"
    assess_dir.mkdir(parents=True, exist_ok=True)
    report.save_json(assess_dir / "utility_report.json")
    report.save_csv(assess_dir / "utility_report.csv")
    return report.to_json_dict()


def run_report(config: StudyConfig, out_dir: Path) -> dict:
    """Collect whatever artifacts exist into summary.json."""
    summary = {"seed": config.seed, "stages": {}, "assessments": {}}
    for stage in ("sysid", "diagnosis", "prognosis-logistic", "prognosis-powerlaw"):
        report_path = out_dir / stage / "report.json"
        if report_path.exists():
            report = _read_json(report_path)
            summary["stages"][stage] = {
                cid: {
                    "rhat": entry["convergence"]["rhat"],
                    "passed": entry["convergence"]["passed"],
                    "map": entry["map"],
                }
                for cid, entry in report["candidates"].items()
            }
    for assess_dir in sorted(out_dir.glob("assess-*")):
        report_path = assess_dir / "utility_report.json"
        if report_path.exists():
            summary["assessments"][assess_dir.name.removeprefix("assess-")] = (
                _read_json(report_path)
            )
    training = out_dir / "surrogates" / "training.json"
    if training.exists():
        summary["surrogates"] = _read_json(training)
    if not summary["stages"] and not summary["assessments"]:
        raise DependencyError(
            f"no artifacts under {out_dir}: run `generate` and the task "
            "commands first"
        )
    _write_json(out_dir / "summary.json", summary)
    return summary


def run_task(config: StudyConfig, task_name: str, out_dir) -> object:
    """Execute one named pipeline stage inside ``out_dir``."""
    out_dir = Path(out_dir)
    if task_name == "generate":
        return run_generate(config, out_dir)
    if task_name == "fit-surrogate":
        return run_fit_surrogate(config, out_dir)
    if task_name == "sysid":
        return run_sysid(config, out_dir)
    if task_name == "diagnose":
        return run_diagnose(config, out_dir)
    if task_name == "prognose":
        return run_prognose(config, out_dir)
    if task_name.startswith("assess-"):
        return run_assess(config, out_dir, task_name.removeprefix("assess-"))
    if task_name == "report":
        return run_report(config, out_dir)
    raise ConfigError(f"unknown task {task_name!r}; expected one of {TASK_NAMES}")
