"""Statistical quadrature evolution for multicarrier continuous-variable QKD."""
from .channel import LogicalChannel, SubChannel
from .config import ConfigError, load_config, parse_config
from .core import CarrierVector, CovMode, ParameterError, SimConfig, WindowSpec
from .estimators import DGQITransformer, QuadratureEvolution
from .keyrate import KeyRateReport, entropy_rate, secret_key_rate, spectral_divergence
from .qe import ConditioningError, EstimatorBundle
from .sim import SimReport, run_pipeline, sweep_m
from .spectral import AutocorrSequence, SpectralDensity, unitary_dft, unitary_idft

__version__ = "0.1.0"

__all__ = [
    "AutocorrSequence", "CarrierVector", "ConditioningError", "ConfigError", "CovMode",
    "DGQITransformer", "EstimatorBundle", "KeyRateReport", "LogicalChannel",
    "ParameterError", "QuadratureEvolution", "SimConfig", "SimReport", "SpectralDensity",
    "SubChannel", "WindowSpec", "entropy_rate", "load_config", "parse_config",
    "run_pipeline", "secret_key_rate", "spectral_divergence", "sweep_m", "unitary_dft",
    "unitary_idft",
]
