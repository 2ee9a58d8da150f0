"""Deterministic blob (particle) method for weighted porous medium flows on an interval.

The usual entry points are :func:`run` for a single simulation and
:func:`run_sweep` for convergence studies; the building blocks live in the
submodules.
"""

from __future__ import annotations

from .dynamics import DynamicsContext
from .ensemble import InitialDensity, ParticleEnsemble, barenblatt, init_from_density
from .errors import (
    BlobError, ConfigError, DegenerateFit, EmptyOmegaMass, IntegrationError, NonConvergence,
    QuadratureFailure, StepSizeUnderflow, ZeroMass,
)
from .harness import (
    SimConfig, SweepConfig, SweepObservable, load_config, load_sweep, resolve_epsilon, run,
    run_sweep,
)
from .integrator import IntegratorConfig, IntegratorMethod, Trajectory, integrate
from .mollifier import Mollifier
from .observables import (
    DiagnosticsRecord, KdeSnapshot, fit_convergence_order, kl_divergence, l1_distance,
    l1_kde_distance, mass_in_omega,
)
from .potentials import ConfiningPotential, ExternalPotential
from .targets import (
    InteractionKernels, KernelMode, TargetDensity, TargetKind, build_kernel_table, log_concave,
    default_piecewise, piecewise_constant, uniform,
)

__version__ = "0.1.0"

__all__ = [
    "BlobError", "ConfigError", "ConfiningPotential", "DegenerateFit", "DiagnosticsRecord",
    "DynamicsContext", "EmptyOmegaMass", "ExternalPotential", "InitialDensity",
    "IntegrationError", "IntegratorConfig", "IntegratorMethod", "InteractionKernels",
    "KdeSnapshot", "KernelMode", "Mollifier", "NonConvergence", "ParticleEnsemble",
    "QuadratureFailure", "SimConfig", "StepSizeUnderflow", "SweepConfig", "SweepObservable",
    "TargetDensity", "TargetKind", "Trajectory", "ZeroMass", "barenblatt", "build_kernel_table",
    "fit_convergence_order", "init_from_density", "integrate", "kl_divergence", "l1_distance",
    "l1_kde_distance", "load_config", "load_sweep", "log_concave", "mass_in_omega",
    "default_piecewise", "piecewise_constant", "resolve_epsilon", "run", "run_sweep", "uniform",
]
