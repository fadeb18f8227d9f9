"""Nedelec edge-element solver for time-harmonic Maxwell with absorption,
with one-level and hybrid two-level weighted Schwarz preconditioners."""
from .config import ExperimentConfig, load_config, load_sweep
from .errors import (
    AssemblyError,
    ConfigurationError,
    MaxwellSchwarzError,
    NotPositiveDefiniteError,
    OutOfDomainError,
    SingularMatrixError,
)
from .harness import RunReport, convergence_study, run_experiment, sweep
from .kernels import BACKEND
from .mesh import BoxMesh, build_box_mesh
from .nedelec import EdgeDofMap, ProblemParams, assemble_system

__version__ = "0.1.0"

__all__ = [
    "AssemblyError",
    "BACKEND",
    "BoxMesh",
    "ConfigurationError",
    "EdgeDofMap",
    "ExperimentConfig",
    "MaxwellSchwarzError",
    "NotPositiveDefiniteError",
    "OutOfDomainError",
    "ProblemParams",
    "RunReport",
    "SingularMatrixError",
    "assemble_system",
    "build_box_mesh",
    "convergence_study",
    "load_config",
    "load_sweep",
    "run_experiment",
    "sweep",
]
