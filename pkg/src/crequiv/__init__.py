"""Similarity testing of two competing risks models with a parametric bootstrap."""
from .constrained import ConstrainedFitError, ConstrainedFitResult, fit_constrained, select_bootstrap_params
from .data import Administrative, DataError, Observation, Parametric, Sample, parse_censoring, read_csv
from .distance import DistanceResult, global_distance, sup_norm_diff
from .equivalence import BootstrapError, TestConfig, TestResult, iup_test, p_value, run_test
from .hazards import (
    CompetingRisksModel,
    IntensityFamily,
    ParameterDomainError,
    cumulative_intensity,
    exponential,
    gompertz,
    intensity,
    survival,
    weibull,
    weibull_from_log_shape,
)
from .likelihood import FitResult, fit_censoring, fit_mle, log_likelihood
from .nonparametric import StepFunction, na_confidence, nelson_aalen
from .scenarios import SCENARIOS, ScenarioConfig, run_scenario
from .simulation import SimulationPlan, simulate_sample, stream

__version__ = "0.1.0"
