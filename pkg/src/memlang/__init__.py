"""Simulation and analysis toolkit for Langevin dynamics with memory.

The central object is a memory kernel K(t) of width Omega; the dynamics
M Qdd + V'(Q) + 2 eta int_0^t K(t - t') Qd(t') dt' = xi(t) interpolates
between the Markovian limit (Omega -> infinity) and strongly non-Markovian
motion, controlled by the dimensionless parameter delta = eta / (M Omega).
"""

__version__ = "0.1.0"

from .errors import (ConfigError, DomainError, IllPosedTruncationError,
                     IntegrationDivergedError, MemlangError, NumericError,
                     UnsupportedKindError, UnsupportedOrderError)
from .kernels import (CutoffKind, KernelSpec, cutoff_f, memory_kernel,
                      counterterm_shift, j_coeff, laplace_kernel, r_taylor,
                      r_series, max_j_order)
from .noise import (NoiseGrid, NoisePath, RNG_ALGORITHM, stream, sample_white,
                    sample_colored, sample_colored_block, empirical_covariance)
from .integrators import INTEGRATORS, Potential, Trajectory, run_paths
from .analytic import (ResponseFunction, SeriesSolution, markovian_response,
                       exact_response_lorentzian, truncated_response,
                       series_response, homogeneous_solution, q2_series,
                       q2_numeric, asymptotics)
from .bath import (ModeTable, BathRealization, discretize_bath,
                   reconstructed_kernel, sample_thermal_ics,
                   integrate_system_bath, run_oracle_ensemble)
from .ensemble import (EnsembleConfig, EnsembleStats, run_ensemble,
                       reproduce_figure)

__all__ = [
    "__version__",
    # errors
    "MemlangError", "ConfigError", "DomainError", "NumericError",
    "UnsupportedOrderError", "UnsupportedKindError",
    "IntegrationDivergedError", "IllPosedTruncationError",
    # kernels
    "CutoffKind", "KernelSpec", "cutoff_f", "memory_kernel",
    "counterterm_shift", "j_coeff", "laplace_kernel", "r_taylor", "r_series",
    "max_j_order",
    # noise
    "NoiseGrid", "NoisePath", "RNG_ALGORITHM", "stream", "sample_white",
    "sample_colored", "sample_colored_block", "empirical_covariance",
    # integrators
    "INTEGRATORS", "Potential", "Trajectory", "run_paths",
    # analytic
    "ResponseFunction", "SeriesSolution", "markovian_response",
    "exact_response_lorentzian", "truncated_response", "series_response",
    "homogeneous_solution", "q2_series", "q2_numeric", "asymptotics",
    # bath oracle
    "ModeTable", "BathRealization", "discretize_bath", "reconstructed_kernel",
    "sample_thermal_ics", "integrate_system_bath", "run_oracle_ensemble",
    # ensemble
    "EnsembleConfig", "EnsembleStats", "run_ensemble", "reproduce_figure",
]
