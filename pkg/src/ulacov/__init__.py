"""Covariance estimation with the unadjusted Langevin algorithm.

Sampling (single chain and embarrassingly parallel), 1/n sample moments,
the sample-complexity planner, closed-form Gaussian oracles and a Monte
Carlo harness that measures each term of the error decomposition.
"""

from .errors import (
    ConfigurationError,
    InputError,
    NumericalError,
    RuntimeCapExceeded,
    UlacovError,
)
from .estimators import (
    MomentAccumulator,
    MomentSummary,
    centered_decomposition_terms,
    operator_norm,
    sample_moments,
)
from .harness import ExperimentConfig, ExperimentRecord, compare_modes, rate_sweep, run_experiment
from .planner import (
    ComplexityPlan,
    joint_lsi,
    marginal_lsi,
    plan_for,
    plan_parallel,
    plan_single,
    theorem1_burnin,
)
from .potentials import Kind, PotentialSpec
from .sampler import ChainParams, SampleBlock, run_parallel, run_single, single_moments, ula_step

__version__ = "0.1.0"
