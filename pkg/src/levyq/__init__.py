"""Certified transient distributions of queues with one-sided compound-Poisson input.

The package discretizes the M/G/1 workload process (and its spectrally
negative counterpart) into a finite Markov chain, lifts the chain's
distribution back to a piecewise-constant density on the original state
space, and accumulates an explicit Wasserstein-distance bound between the
lifted and the true transient law.  An exact event-driven Monte Carlo
simulator validates the certificates statistically.
"""

from .bounds import (
    BoundLedger,
    OneJumpRefiner,
    StepComponents,
    jump_aggregation_error,
    jump_aggregation_refined,
    jump_cut_error_mg1,
    jump_cut_error_specneg,
    step_bound,
    truncation_error_mg1,
    truncation_error_specneg,
)
from .errors import (
    CertificationError,
    ConfigError,
    GridError,
    LevyqError,
    SupportError,
)
from .jobsize import (
    CustomCdf,
    Deterministic,
    Erlang,
    Exponential,
    JobSize,
    Pareto,
    TabulatedCdf,
    Uniform,
)
from .kernel import (
    ModelKind,
    ModelSpec,
    TransitionKernel,
    build_kernel,
    build_mg1,
    build_specneg,
    rescale_for_speed,
)
from .measure import (
    DiscreteDist,
    GeneralMeasure,
    Grid,
    LiftedDistribution,
    wasserstein,
)
from .oracle import SimConfig, empirical_wasserstein, simulate
from .solver import TransientResult, certified_tail, discretize_initial, lift, solve

__version__ = "0.1.0"

__all__ = [
    "BoundLedger",
    "CertificationError",
    "ConfigError",
    "CustomCdf",
    "Deterministic",
    "DiscreteDist",
    "Erlang",
    "Exponential",
    "GeneralMeasure",
    "Grid",
    "GridError",
    "JobSize",
    "LevyqError",
    "LiftedDistribution",
    "ModelKind",
    "ModelSpec",
    "OneJumpRefiner",
    "Pareto",
    "SimConfig",
    "StepComponents",
    "SupportError",
    "TabulatedCdf",
    "TransientResult",
    "TransitionKernel",
    "Uniform",
    "build_kernel",
    "build_mg1",
    "build_specneg",
    "certified_tail",
    "discretize_initial",
    "empirical_wasserstein",
    "jump_aggregation_error",
    "jump_aggregation_refined",
    "jump_cut_error_mg1",
    "jump_cut_error_specneg",
    "lift",
    "rescale_for_speed",
    "simulate",
    "solve",
    "step_bound",
    "truncation_error_mg1",
    "truncation_error_specneg",
    "wasserstein",
]
