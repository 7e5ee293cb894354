"""Feedback-controlled optomechanical Gaussian dynamics and nonlocality measures."""
from ._kernels import BACKEND
from .dynamics import (
    build_drift,
    build_noise,
    evolve_cm,
    evolve_to_steady,
    extract_cavity,
    extract_mechanical,
    steady_cm,
)
from .errors import (
    DivergenceError,
    DomainError,
    NonPhysicalError,
    OptoFeedbackError,
    ParameterError,
    SingularSystemError,
    UnstableSystemError,
)
from .effective import analytic_measures, effective_params, tms_vacuum_cm
from .measures import (
    BellConfig,
    MeasureSet,
    bell_chsh,
    compute_measures,
    log_negativity,
    maximize_bell,
    purity,
    steering,
    wigner,
)
from .model import SystemParams, check_stability

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BellConfig",
    "DivergenceError",
    "DomainError",
    "NonPhysicalError",
    "OptoFeedbackError",
    "ParameterError",
    "SingularSystemError",
    "UnstableSystemError",
    "MeasureSet",
    "SystemParams",
    "analytic_measures",
    "bell_chsh",
    "build_drift",
    "build_noise",
    "check_stability",
    "compute_measures",
    "effective_params",
    "evolve_cm",
    "evolve_to_steady",
    "extract_cavity",
    "extract_mechanical",
    "log_negativity",
    "maximize_bell",
    "purity",
    "steady_cm",
    "steering",
    "tms_vacuum_cm",
    "wigner",
]
