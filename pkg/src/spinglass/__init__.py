"""Exact and Monte Carlo free energies for the Hopfield and SK models."""

__version__ = "0.1.0"

from .disorder import DisorderSeed, PatternDistribution, gen_couplings, gen_patterns, gen_scaled_first_pattern
from .errors import (
    CapacityError,
    ConfigurationError,
    DisorderError,
    DomainError,
    OutputError,
    PartialResultError,
    PreconditionError,
    SchemaError,
    SpinGlassError,
)
from .exact import (
    ExactEngine,
    ExactResult,
    Observable,
    closed_form_beta_zero,
    exact_diffrule_check,
    exact_gibbs_expectation,
    exact_interpolation_derivative,
    exact_log_partition,
    exact_overlap_statistics,
)
from .mc import (
    PTResult,
    TemperingConfig,
    disorder_average,
    mc_overlap_statistics,
    metropolis_sweep,
    parallel_tempering_run,
    thermo_integration,
    thermo_integration_free_energy,
)
from .model import (
    CouplingMatrix,
    Disorder,
    Hamiltonian,
    ModelParams,
    PatternMatrix,
    SpinConfiguration,
    energy,
    flip_delta,
)
from .stats import EstimateWithError, jackknife

__all__ = [name for name in dir() if not name.startswith("_")]
