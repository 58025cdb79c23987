"""Cost-aware search for cloud configurations (VM type x cluster size)."""

__version__ = "0.1.0"

from .acquisition import AcquisitionSpec, expected_improvement, lower_confidence_bound, probability_of_improvement
from .bench import ExperimentSpec, Strategy, run_experiment
from .catalog import CloudConfiguration, ConfigurationSpace, VmType, default_catalog, default_space, enumerate_space
from .cost import Mode, Observation, PiMeasurement, config_cost, pi_charge, pi_runtime_estimate
from .exceptions import CloudConfError
from .pareto import FrontPoint, ParetoFront, pareto_front, recommend
from .search import Budget, CloudConfigSearch, SearchPolicy, run_search
from .surrogate import GaussianProcessSurrogate, RandomForestSurrogate
from .synthcloud import PRESET_MODELS, AmdahlModel, SyntheticBackend
from .trace import Trace, TraceBackend, load_trace, read_trace

__all__ = [
    "AcquisitionSpec", "AmdahlModel", "Budget", "CloudConfError", "CloudConfigSearch", "CloudConfiguration",
    "ConfigurationSpace", "ExperimentSpec", "FrontPoint", "GaussianProcessSurrogate", "Mode", "Observation",
    "PRESET_MODELS", "ParetoFront", "PiMeasurement", "RandomForestSurrogate", "SearchPolicy", "Strategy",
    "SyntheticBackend", "Trace", "TraceBackend", "VmType", "config_cost", "default_catalog", "default_space",
    "enumerate_space", "expected_improvement", "load_trace", "lower_confidence_bound", "pareto_front",
    "pi_charge", "pi_runtime_estimate", "probability_of_improvement", "read_trace", "recommend",
    "run_experiment", "run_search",
]
