"""Bayesian model updating and decision-utility assessment for
strain-monitored, corroding structures."""

from .assessment import (
    LimitState,
    UtilityReport,
    UtilityWeights,
    assess_candidates,
    expected_utility,
    failure_probability,
    loglik_attr,
    nmse,
    u_lik,
    u_nmse,
    u_pf,
    unified_utility,
)
from .config import StudyConfig, default_config, load_config
from .deterioration import (
    LogisticParams,
    PowerLawParams,
    logistic_dtau,
    powerlaw_dtau,
)
from .distributions import (
    HalfNormal,
    Normal,
    RngStream,
    Uniform,
    log_pdf,
    normal_cdf,
    sample,
)
from .inference import (
    ConvergenceReport,
    ParameterSpace,
    PosteriorDraws,
    TaskSpec,
    log_posterior,
    make_log_posterior,
    map_estimate,
    parameter_space,
    posterior_predictive,
    run_mcmc,
    split_rhat,
)
from .series import (
    StrainSeries,
    load_csv,
    split_phases,
    split_train_forecast,
    write_csv,
)
from .structural import (
    Geometry,
    ModelCandidate,
    PolySurrogate,
    beam_strain,
    doe_grid,
    emulator_strain,
    emulator_vm_stress,
    fit_candidate_surrogates,
    fit_surrogate,
    predict_demand,
    predict_strain,
    surrogate_eval,
)
from .study import run_task
from .synthetic import TruthConfig, generate_synthetic

__version__ = "0.1.0"
